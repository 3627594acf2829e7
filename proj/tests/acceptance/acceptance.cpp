#include <cstdio>
#include <cstdlib>
#include <string>

#include "conewidth/experiment.hpp"

int main(int argc, char** argv) {
    cw::VerifyOptions opt;
    opt.out_dir = argc > 1 ? argv[1] : "acceptance_out";
    if (const char* q = std::getenv("CONEWIDTH_ACCEPTANCE_QUICK")) opt.quick = std::string(q) == "1";
    for (int i = 2; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
    opt.on_result = [](const cw::CriterionResult& r) {
        std::printf("criterion %2d: %s  %s: %s [%.1f s]\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str(), r.seconds);
        std::fflush(stdout);
    };
    auto sum = cw::verify_all(opt);
    int failed = 0;
    for (const auto& r : sum.results) failed += r.passed ? 0 : 1;
    std::printf("%d of %zu criteria passed\n", int(sum.results.size()) - failed, sum.results.size());
    return failed == 0 ? 0 : 1;
}
