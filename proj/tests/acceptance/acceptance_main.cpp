#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "bqs/acceptance.hpp"

// Usage: bqs_acceptance [id ...] [--json path]
int main(int argc, char** argv) {
    std::vector<int> ids;
    std::string json_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--json" && i + 1 < argc)
            json_path = argv[++i];
        else
            ids.push_back(std::atoi(a.c_str()));
    }
    const auto results = bqs::run_acceptance(ids, 0, [](const bqs::CriterionResult& r) {
        std::printf("%s\n", bqs::criterion_line(r).c_str());
        std::fflush(stdout);
    });
    int failed = 0;
    for (const auto& r : results) failed += !r.passed;
    std::printf("%d/%zu criteria passed\n", int(results.size()) - failed, results.size());
    if (!json_path.empty()) std::ofstream(json_path) << bqs::acceptance_json(results) << "\n";
    return failed == 0 ? 0 : 1;
}
