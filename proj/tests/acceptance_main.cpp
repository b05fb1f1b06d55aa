#include "tdxray/harness/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Usage: acceptance [tolerance_scale] [module]
int main(int argc, char** argv) {
    using namespace tdxray::harness;
    AcceptanceOptions o;
    if (argc > 1) o.tolerance_scale = std::atof(argv[1]);
    if (argc > 2) o.only = argv[2];
    try {
        auto rows = run_acceptance(o, [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; });
        int failed = 0;
        for (const auto& r : rows) failed += r.pass ? 0 : 1;
        std::cout << (rows.size() - static_cast<std::size_t>(failed)) << "/" << rows.size() << " criteria passed\n";
        return failed == 0 ? 0 : 1;
    } catch (const tdxray::Error& e) {
        std::cerr << error_record(e) << "\n";
        return 2;
    }
}
