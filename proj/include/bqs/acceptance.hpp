#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bqs {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string measured;
    std::string threshold;
    double seconds = 0.0;
    std::string detail;
};

CriterionResult ac1_zero_mode_propagator();
CriterionResult ac2_double_zero_rotation();
CriterionResult ac3_multiplier_exactness(std::uint64_t seed = 20240611);
CriterionResult ac4_round_trips(std::uint64_t seed = 7);
CriterionResult ac5_dispersive_decay();
CriterionResult ac6_enhanced_dissipation();
CriterionResult ac7_inviscid_damping();
CriterionResult ac8_lift_up();
CriterionResult ac9_nonlinear_certificate(std::uint64_t seed = 11);

// Runs the selected criteria (all when `ids` is empty); errors inside a
// criterion become a failed result carrying the message.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {}, std::uint64_t seed = 0,
                                            const std::function<void(const CriterionResult&)>& on_done = {});

std::string criterion_line(const CriterionResult& r);
std::string acceptance_json(const std::vector<CriterionResult>& results);

}  // namespace bqs
