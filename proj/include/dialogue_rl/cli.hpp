#pragma once

#include "dialogue_rl/rewards.hpp"
#include "dialogue_rl/rl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dialogue_rl::cli {

/// Every tunable of the pipeline. Loaded from a flat `key = value` config
/// file; command-line flags override file values, and DIALOGUE_RL_SEED
/// overrides the seed.
struct RunConfig {
    std::uint64_t seed = 42;
    int hidden_size = 64;
    int max_vocab = 2000;
    int max_len = 16;
    int max_src_len = 40;
    int layers = 1;

    // supervised stage
    int mle_epochs = 30;
    double mle_lr = 0.5;
    int batch_size = 16;

    // mutual-information stage
    int mmi_epochs = 18;
    double mmi_lr = 0.03;
    double mmi_baseline_lr = 0.05;
    int mmi_anneal_start = 16;

    // rewards
    double lambda1 = 0.25;
    double lambda2 = 0.25;
    double lambda3 = 0.5;
    double cos_epsilon = 1e-8;
    std::string dull_list_path; // empty = built-in defaults

    // policy-gradient stage
    int rl_epochs = 12;
    double rl_lr = 0.02;
    double rl_baseline_lr = 0.05;
    std::string rl_curriculum = "0:2,3:3,6:4,9:5";
    int candidates_per_step = 5;
    int branch_budget = 125;
    int rl_batch_messages = 8;
    bool rl_baseline = true;
    bool reward_to_go = false;
    int rl_starters = 200;
    double starter_keep_fraction = 0.2;

    // decoding / evaluation
    int beam_width = 10;
    int eval_max_turns = 8;
    double temperature = 1.0;

    // file paths (overridable by flags)
    std::string corpus_path;
    std::string backward_model;
    std::string scoring_model;

    void validate() const;
    std::vector<rl::CurriculumStage> parse_curriculum() const;
};

RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Entry point shared by main() and the tests. args excludes the program
/// name. Returns the process exit status.
int run(const std::vector<std::string>& args);

} // namespace dialogue_rl::cli
