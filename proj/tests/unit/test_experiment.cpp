#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "conewidth/errors.hpp"
#include "conewidth/experiment.hpp"
#include "conewidth/format.hpp"

using namespace cw;
namespace fs = std::filesystem;

TEST_SUITE("experiment") {

TEST_CASE("config parsing and layering") {
    auto c = Config::parse("# header\nsigma = 0.2\naxis=1,0  # trailing\n\nN=64\nquick=yes\n");
    CHECK(c.num("sigma", 0) == 0.2);
    CHECK(c.integer("N", 0) == 64);
    CHECK(c.flag("quick", false));
    CHECK(c.vec("axis", Vec())[0] == 1.0);
    CHECK(c.str("missing", "d") == "d");
    Config cli;
    cli.set("sigma", "0.3");
    c.merge(cli);
    CHECK(c.num("sigma", 0) == 0.3);
    CHECK_THROWS_AS(Config::parse("novalue\n"), ArgumentError);
    CHECK_THROWS_AS(Config::parse("=3\n"), ArgumentError);
    CHECK_THROWS_AS(Config::parse("N=abc").integer("N", 0), ArgumentError);
    CHECK_THROWS_AS(Config::parse("s=0.1x").num("s", 0), ArgumentError);
    CHECK_THROWS_AS(Config::parse("q=maybe").flag("q", false), ArgumentError);
    CHECK_THROWS_AS(parse_vec("1,,2"), ArgumentError);
}

TEST_CASE("config hash is order independent") {
    auto a = Config::parse("a=1\nb=2\n");
    auto b = Config::parse("b=2\na=1\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != Config::parse("a=1\nb=3\n").hash());
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("number formatting and csv quoting") {
    CHECK(fmt_double(0.1) == "0.1");
    CHECK(std::stod(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(csv_join({"a", "b,c", "d\"e"}) == "a,\"b,c\",\"d\"\"e\"");
}

TEST_CASE("manifest records outputs") {
    fs::path dir = fs::temp_directory_path() / "conewidth_manifest_test";
    fs::remove_all(dir);
    write_text_file((dir / "out.txt").string(), "hello\n");
    Manifest m("test", Config::parse("k=v"), 17);
    m.job("one", "ok", 0.5);
    m.output(dir.string(), "out.txt");
    m.write(dir.string());
    auto j = nlohmann::json::parse(read_text_file((dir / "manifest.json").string()));
    CHECK(j["seed"] == 17);
    CHECK(j["config"]["k"] == "v");
    CHECK(j["outputs"][0]["sha256"] == sha256_hex("hello\n"));
    CHECK(j["jobs"][0]["name"] == "one");
    fs::remove_all(dir);
}

}
