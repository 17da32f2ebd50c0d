#include "dialogue_rl/cli.hpp"

#include "dialogue_rl/checkpoint.hpp"
#include "dialogue_rl/eval.hpp"
#include "dialogue_rl/mmi.hpp"
#include "dialogue_rl/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace dialogue_rl::cli {

using checkpoint::Checkpoint;
using checkpoint::Kind;
using checkpoint::Stage;
using corpus::TokenSeq;
using seq2seq::ModelParams;

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw std::invalid_argument("config: bad boolean value: " + v);
}

} // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "hidden_size") cfg.hidden_size = std::stoi(value);
    else if (key == "max_vocab") cfg.max_vocab = std::stoi(value);
    else if (key == "max_len") cfg.max_len = std::stoi(value);
    else if (key == "max_src_len") cfg.max_src_len = std::stoi(value);
    else if (key == "layers") cfg.layers = std::stoi(value);
    else if (key == "mle_epochs") cfg.mle_epochs = std::stoi(value);
    else if (key == "mle_lr") cfg.mle_lr = std::stod(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "mmi_epochs") cfg.mmi_epochs = std::stoi(value);
    else if (key == "mmi_lr") cfg.mmi_lr = std::stod(value);
    else if (key == "mmi_baseline_lr") cfg.mmi_baseline_lr = std::stod(value);
    else if (key == "mmi_anneal_start") cfg.mmi_anneal_start = std::stoi(value);
    else if (key == "lambda1") cfg.lambda1 = std::stod(value);
    else if (key == "lambda2") cfg.lambda2 = std::stod(value);
    else if (key == "lambda3") cfg.lambda3 = std::stod(value);
    else if (key == "cos_epsilon") cfg.cos_epsilon = std::stod(value);
    else if (key == "dull_list") cfg.dull_list_path = value;
    else if (key == "rl_epochs") cfg.rl_epochs = std::stoi(value);
    else if (key == "rl_lr") cfg.rl_lr = std::stod(value);
    else if (key == "rl_baseline_lr") cfg.rl_baseline_lr = std::stod(value);
    else if (key == "rl_curriculum") cfg.rl_curriculum = value;
    else if (key == "candidates_per_step") cfg.candidates_per_step = std::stoi(value);
    else if (key == "branch_budget") cfg.branch_budget = std::stoi(value);
    else if (key == "rl_batch_messages") cfg.rl_batch_messages = std::stoi(value);
    else if (key == "rl_baseline") cfg.rl_baseline = parse_bool(value);
    else if (key == "reward_to_go") cfg.reward_to_go = parse_bool(value);
    else if (key == "rl_starters") cfg.rl_starters = std::stoi(value);
    else if (key == "starter_keep_fraction") cfg.starter_keep_fraction = std::stod(value);
    else if (key == "beam_width") cfg.beam_width = std::stoi(value);
    else if (key == "eval_max_turns") cfg.eval_max_turns = std::stoi(value);
    else if (key == "temperature") cfg.temperature = std::stod(value);
    else if (key == "corpus") cfg.corpus_path = value;
    else if (key == "backward_model") cfg.backward_model = value;
    else if (key == "scoring_model") cfg.scoring_model = value;
    else throw std::invalid_argument("config: unknown key: " + key);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: missing '=' at line " + std::to_string(line_no));
        }
        apply_override(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

std::vector<rl::CurriculumStage> RunConfig::parse_curriculum() const {
    std::vector<rl::CurriculumStage> stages;
    std::istringstream in(rl_curriculum);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        require(colon != std::string::npos, "config: bad curriculum entry: " + item);
        rl::CurriculumStage stage;
        stage.epoch = std::stoi(item.substr(0, colon));
        stage.max_turns = std::stoi(item.substr(colon + 1));
        stages.push_back(stage);
    }
    return stages;
}

void RunConfig::validate() const {
    require(hidden_size > 0, "config: hidden_size must be positive");
    require(max_vocab > 4, "config: max_vocab must exceed the reserved ids");
    require(max_len >= 2, "config: max_len must be >= 2");
    require(layers == 1, "config: only 1 LSTM layer is supported");
    require(mle_lr > 0.0 && mmi_lr > 0.0 && rl_lr > 0.0, "config: learning rates must be positive");
    require(batch_size >= 1, "config: batch_size must be >= 1");
    require(std::fabs(lambda1 + lambda2 + lambda3 - 1.0) <= 1e-9,
            "config: reward weights must sum to 1");
    require(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0,
            "config: reward weights must be non-negative");
    require(starter_keep_fraction > 0.0 && starter_keep_fraction <= 1.0,
            "config: starter_keep_fraction must be in (0,1]");
    require(beam_width >= 1, "config: beam_width must be >= 1");
    require(eval_max_turns >= 1, "config: eval_max_turns must be >= 1");
    require(temperature > 0.0, "config: temperature must be positive");

    rl::RlConfig probe;
    probe.curriculum = parse_curriculum();
    probe.candidates_per_step = candidates_per_step;
    probe.lr = rl_lr;
    probe.branch_budget = branch_budget;
    probe.batch_messages = rl_batch_messages;
    probe.epochs = rl_epochs;
    probe.validate();
}

namespace {

void apply_env_seed(RunConfig& cfg) {
    const char* env = std::getenv("DIALOGUE_RL_SEED");
    if (env != nullptr && env[0] != '\0') {
        cfg.seed = std::stoull(env);
    }
}

rewards::DullList load_dull(const RunConfig& cfg, const corpus::Vocab& vocab) {
    if (cfg.dull_list_path.empty()) {
        return rewards::DullList::defaults(vocab);
    }
    return rewards::DullList::from_file(cfg.dull_list_path, vocab);
}

rewards::RewardWeights weights_from(const RunConfig& cfg) {
    rewards::RewardWeights w;
    w.ease = cfg.lambda1;
    w.flow = cfg.lambda2;
    w.coherence = cfg.lambda3;
    w.validate();
    return w;
}

Checkpoint load_checkpoint_or_die(const std::string& path, const char* what) {
    try {
        return checkpoint::load(path);
    } catch (const checkpoint::CheckpointError& e) {
        throw std::runtime_error(std::string(what) + ": " + e.what());
    }
}

void require_stage(const Checkpoint& ckpt, Stage expected, const std::string& command,
                   const std::string& producer) {
    if (ckpt.stage != expected) {
        throw std::runtime_error(command + " requires a " +
                                 std::string(checkpoint::stage_name(expected)) +
                                 "-stage checkpoint (run " + producer + " first); got stage=" +
                                 checkpoint::stage_name(ckpt.stage));
    }
}

// Swapped pairs for the backward model: predict the previous turn from the
// response.
std::vector<corpus::TrainPair> make_backward_pairs(const std::vector<corpus::Dialogue>& dialogues,
                                                   const corpus::Vocab& vocab, int max_src_len) {
    std::vector<corpus::TrainPair> pairs;
    for (const corpus::Dialogue& d : dialogues) {
        if (d.turns.size() < 2) {
            continue;
        }
        std::vector<TokenSeq> encoded;
        for (const std::string& turn : d.turns) {
            encoded.push_back(corpus::encode_text(turn, vocab));
        }
        for (std::size_t i = 1; i < encoded.size(); ++i) {
            corpus::TrainPair p;
            p.source = encoded[i];
            if (static_cast<int>(p.source.size()) > max_src_len) {
                p.source.resize(static_cast<std::size_t>(max_src_len));
            }
            p.target = encoded[i - 1];
            p.target.push_back(corpus::Vocab::eos_id);
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

ModelParams train_mle_loop(const std::vector<corpus::TrainPair>& pairs, int vocab_size,
                           const RunConfig& cfg, std::uint64_t seed, bool quiet) {
    require(!pairs.empty(), "train-mle: no training pairs");
    Rng init_rng = derive_rng(seed, 0x171ull);
    ModelParams model = ModelParams::init(vocab_size, cfg.hidden_size, init_rng);

    const int n = static_cast<int>(pairs.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int epoch = 0; epoch < cfg.mle_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = derive_rng(seed, 0x3AFull + static_cast<std::uint64_t>(epoch));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.below(static_cast<std::uint32_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        int steps = 0;
        for (int base = 0; base < n; base += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - base);
            std::vector<corpus::TrainPair> batch;
            batch.reserve(static_cast<std::size_t>(count));
            for (int j = 0; j < count; ++j) {
                batch.push_back(pairs[static_cast<std::size_t>(order[static_cast<std::size_t>(
                    base + j)])]);
            }
            epoch_loss += seq2seq::mle_step(batch, model, cfg.mle_lr).mean_loss;
            ++steps;
        }
        if (!quiet) {
            std::printf("mle epoch %d  loss=%.4f\n", epoch, epoch_loss / std::max(1, steps));
            std::fflush(stdout);
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_gen_corpus(std::uint64_t seed, int n, const std::string& out,
                   const std::string& openers_out) {
    const auto dialogues = corpus::gen_synthetic_corpus(seed, n);
    corpus::write_corpus_file(dialogues, out);
    if (!openers_out.empty()) {
        std::ofstream f(openers_out);
        if (!f) {
            throw std::runtime_error("cannot write openers file: " + openers_out);
        }
        for (const auto& d : dialogues) {
            f << d.turns.front() << "\n";
        }
    }
    std::printf("wrote %zu dialogues to %s\n", dialogues.size(), out.c_str());
    return 0;
}

int cmd_train_mle(const std::string& corpus_path, RunConfig cfg, const std::string& out,
                  const std::string& direction) {
    const bool backward = direction == "backward";
    require(direction == "forward" || backward, "train-mle: direction must be forward|backward");

    const auto dialogues = corpus::read_corpus_file(corpus_path);
    const corpus::Vocab vocab = corpus::build_vocab(dialogues, cfg.max_vocab);

    const auto pairs = backward ? make_backward_pairs(dialogues, vocab, cfg.max_src_len)
                                : corpus::make_pairs(dialogues, vocab, cfg.max_src_len);
    std::printf("training %s mle model: %zu pairs, vocab %d\n", direction.c_str(), pairs.size(),
                vocab.size());

    const std::uint64_t seed = backward ? splitmix64(cfg.seed ^ 0xBACDull) : cfg.seed;
    ModelParams model = train_mle_loop(pairs, vocab.size(), cfg, seed, false);

    Checkpoint ckpt;
    ckpt.params = std::move(model);
    ckpt.vocab = vocab;
    ckpt.stage = Stage::mle;
    ckpt.kind = backward ? Kind::backward : Kind::forward;
    checkpoint::save(ckpt, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_train_mmi(const std::string& init_path, const std::string& backward_path, RunConfig cfg,
                  const std::string& out) {
    require(!cfg.corpus_path.empty(), "train-mmi: config must set corpus = <path>");

    Checkpoint init = load_checkpoint_or_die(init_path, "train-mmi --init");
    require_stage(init, Stage::mle, "train-mmi", "train-mle");
    Checkpoint bwd = load_checkpoint_or_die(backward_path, "train-mmi --backward");
    require(bwd.kind == Kind::backward, "train-mmi: --backward must be a backward-kind model");
    require(checkpoint::vocab_hash(init.vocab) == checkpoint::vocab_hash(bwd.vocab),
            "train-mmi: vocab mismatch between forward and backward models");

    const auto dialogues = corpus::read_corpus_file(cfg.corpus_path);
    const auto pairs = corpus::make_pairs(dialogues, init.vocab, cfg.max_src_len);

    // The pre-trained forward model stays frozen as the scorer while the
    // policy copy moves.
    ModelParams policy = init.params;
    Rng baseline_rng = derive_rng(cfg.seed, 0xBA5Eull);
    mmi::BaselineNet baseline = mmi::BaselineNet::init(cfg.hidden_size, cfg.hidden_size,
                                                       baseline_rng);

    mmi::MmiRlConfig mcfg;
    mcfg.epochs = cfg.mmi_epochs;
    mcfg.lr = cfg.mmi_lr;
    mcfg.baseline_lr = cfg.mmi_baseline_lr;
    mcfg.batch_size = cfg.batch_size;
    mcfg.max_len = cfg.max_len;
    mcfg.anneal_start = cfg.mmi_anneal_start;
    mcfg.temperature = cfg.temperature;
    mcfg.seed = cfg.seed;
    mcfg.verbose = true;

    mmi::train_mmi_rl(policy, init.params, bwd.params, baseline, pairs, mcfg);

    Checkpoint out_ckpt;
    out_ckpt.params = std::move(policy);
    out_ckpt.vocab = init.vocab;
    out_ckpt.stage = Stage::mmi;
    out_ckpt.kind = Kind::forward;
    checkpoint::save(out_ckpt, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_train_rl(const std::string& init_path, RunConfig cfg, const std::string& out,
                 const std::string& log_path) {
    require(!cfg.corpus_path.empty(), "train-rl: config must set corpus = <path>");
    require(!cfg.backward_model.empty(),
            "train-rl: config must set backward_model = <path> (or pass --backward)");

    Checkpoint init = load_checkpoint_or_die(init_path, "train-rl --init");
    require_stage(init, Stage::mmi, "train-rl", "train-mmi");
    Checkpoint bwd = load_checkpoint_or_die(cfg.backward_model, "train-rl backward model");
    require(bwd.kind == Kind::backward, "train-rl: backward model must be backward-kind");

    // Scoring model for r1/r3: the frozen snapshot the policy starts from,
    // unless the config points elsewhere.
    Checkpoint scoring;
    if (cfg.scoring_model.empty()) {
        scoring = init;
    } else {
        scoring = load_checkpoint_or_die(cfg.scoring_model, "train-rl scoring model");
    }
    require(checkpoint::vocab_hash(init.vocab) == checkpoint::vocab_hash(bwd.vocab) &&
                checkpoint::vocab_hash(init.vocab) == checkpoint::vocab_hash(scoring.vocab),
            "train-rl: vocab mismatch across models");

    const auto dialogues = corpus::read_corpus_file(cfg.corpus_path);
    const auto pairs = corpus::make_pairs(dialogues, init.vocab, cfg.max_src_len);

    // Starter set: single-message sources (dialogue openers), deduplicated,
    // then filtered for the lowest dull-response likelihood.
    std::vector<corpus::TrainPair> openers;
    std::set<TokenSeq> seen;
    for (const auto& p : pairs) {
        if (std::find(p.source.begin(), p.source.end(), corpus::Vocab::eos_id) ==
                p.source.end() &&
            seen.insert(p.source).second) {
            openers.push_back(p);
        }
    }
    rewards::DullList dull = load_dull(cfg, init.vocab);
    std::vector<TokenSeq> starters = corpus::filter_easy_starters(
        openers, scoring.params, dull.phrases, cfg.starter_keep_fraction);
    if (static_cast<int>(starters.size()) > cfg.rl_starters) {
        starters.resize(static_cast<std::size_t>(cfg.rl_starters));
    }
    require(!starters.empty(), "train-rl: starter set is empty");
    std::printf("train-rl: %zu starter messages\n", starters.size());

    rewards::RewardContext reward_ctx;
    reward_ctx.fwd = &scoring.params;
    reward_ctx.bwd = &bwd.params;
    reward_ctx.dull = std::move(dull);
    reward_ctx.weights = weights_from(cfg);
    reward_ctx.cos_epsilon = cfg.cos_epsilon;

    rl::RlConfig rcfg;
    rcfg.curriculum = cfg.parse_curriculum();
    rcfg.candidates_per_step = cfg.candidates_per_step;
    rcfg.lr = cfg.rl_lr;
    rcfg.baseline_lr = cfg.rl_baseline_lr;
    rcfg.branch_budget = cfg.branch_budget;
    rcfg.use_baseline = cfg.rl_baseline;
    rcfg.reward_to_go = cfg.reward_to_go;
    rcfg.batch_messages = cfg.rl_batch_messages;
    rcfg.max_len = cfg.max_len;
    rcfg.temperature = cfg.temperature;
    rcfg.epochs = cfg.rl_epochs;
    rcfg.seed = cfg.seed;
    rcfg.verbose = true;

    ModelParams policy = init.params;
    Rng baseline_rng = derive_rng(cfg.seed, 0xBA5E2ull);
    mmi::BaselineNet baseline = mmi::BaselineNet::init(cfg.hidden_size, cfg.hidden_size,
                                                       baseline_rng);

    std::ofstream log(log_path);
    if (!log) {
        throw std::runtime_error("cannot write log file: " + log_path);
    }
    rl::train_rl(policy, starters, reward_ctx, baseline, rcfg, &log);

    Checkpoint out_ckpt;
    out_ckpt.params = std::move(policy);
    out_ckpt.vocab = init.vocab;
    out_ckpt.stage = Stage::rl;
    out_ckpt.kind = Kind::forward;
    checkpoint::save(out_ckpt, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& inputs_path, int max_turns,
                 const std::string& out_path, RunConfig cfg) {
    Checkpoint ckpt = load_checkpoint_or_die(model_path, "simulate --model");
    const auto lines = corpus::read_lines(inputs_path);
    require(!lines.empty(), "simulate: empty inputs file");

    rewards::DullList dull = load_dull(cfg, ckpt.vocab);

    // Transcript-only simulation: beam decoding, no reward bookkeeping.
    rewards::RewardContext ctx;
    ctx.dull = dull;

    std::ofstream out(out_path);
    if (!out) {
        throw std::runtime_error("cannot write transcript file: " + out_path);
    }

    int branch_id = 0;
    for (const std::string& line : lines) {
        const TokenSeq initial = corpus::encode_text(line, ckpt.vocab);
        require(!initial.empty(), "simulate: empty input line");

        simulator::SimulateOptions opt;
        opt.max_turns = max_turns;
        opt.candidates_per_step = 1;
        opt.mode = simulator::GenMode::beam;
        opt.branch_budget = 1;
        opt.max_len = cfg.max_len;
        opt.compute_rewards = false;
        const auto result = simulator::simulate(initial, ckpt.params, ctx, opt);
        for (const auto& d : result.dialogues) {
            out << simulator::format_transcript(d, ckpt.vocab, branch_id++) << "\n";
        }
    }
    std::printf("wrote %d transcripts to %s\n", branch_id, out_path.c_str());
    return 0;
}

int cmd_evaluate(const std::string& models_arg, const std::string& inputs_path,
                 const std::string& report_path, RunConfig cfg) {
    std::vector<std::string> paths;
    std::istringstream split(models_arg);
    std::string item;
    while (std::getline(split, item, ',')) {
        if (!item.empty()) {
            paths.push_back(item);
        }
    }
    require(!paths.empty(), "evaluate: no model paths given");

    std::vector<Checkpoint> ckpts;
    for (const std::string& p : paths) {
        ckpts.push_back(load_checkpoint_or_die(p, "evaluate --models"));
    }
    for (const Checkpoint& c : ckpts) {
        require(checkpoint::vocab_hash(c.vocab) == checkpoint::vocab_hash(ckpts.front().vocab),
                "evaluate: vocab mismatch across models");
    }

    std::optional<Checkpoint> bwd;
    if (!cfg.backward_model.empty()) {
        bwd = load_checkpoint_or_die(cfg.backward_model, "evaluate backward model");
        require(bwd->kind == Kind::backward, "evaluate: backward model must be backward-kind");
    }

    const auto lines = corpus::read_lines(inputs_path);
    require(!lines.empty(), "evaluate: empty inputs file");
    std::vector<TokenSeq> inputs;
    for (const std::string& line : lines) {
        inputs.push_back(corpus::encode_text(line, ckpts.front().vocab));
    }

    const rewards::DullList dull = load_dull(cfg, ckpts.front().vocab);

    std::vector<eval::NamedModel> models;
    for (std::size_t i = 0; i < ckpts.size(); ++i) {
        eval::NamedModel m;
        m.id = std::string(checkpoint::stage_name(ckpts[i].stage)) + ":" + paths[i];
        m.policy.params = &ckpts[i].params;
        m.policy.beam_width = cfg.beam_width;
        m.policy.max_len = cfg.max_len;
        if (ckpts[i].stage == Stage::mmi && bwd.has_value()) {
            // Table-style decoding for the mutual-information row: n-best
            // from the model, reranked by the backward probability.
            m.policy.rerank_bwd = &bwd->params;
        }
        models.push_back(m);
    }
    if (!bwd.has_value()) {
        for (const Checkpoint& c : ckpts) {
            if (c.stage == Stage::mmi) {
                std::fprintf(stderr,
                             "warning: no backward model; mmi checkpoints decode without rerank\n");
                break;
            }
        }
    }

    const auto reports = eval::compare_models(models, inputs, dull, cfg.eval_max_turns);
    const std::string text = eval::format_reports(reports);
    std::ofstream out(report_path);
    if (!out) {
        throw std::runtime_error("cannot write report file: " + report_path);
    }
    out << text;
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_chat(const std::string& model_path, RunConfig cfg) {
    Checkpoint ckpt = load_checkpoint_or_die(model_path, "chat --model");
    std::optional<Checkpoint> bwd;
    if (!cfg.backward_model.empty()) {
        bwd = load_checkpoint_or_die(cfg.backward_model, "chat backward model");
    } else {
        std::fprintf(stderr, "note: no backward model configured; replies use plain beam search\n");
    }

    std::printf("chat ready (beam %d%s). empty line or ctrl-d exits.\n", cfg.beam_width,
                bwd.has_value() ? ", mmi rerank" : "");

    corpus::TokenSeq own_prev;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (trim(line).empty()) {
            break;
        }
        const TokenSeq user = corpus::encode_text(line, ckpt.vocab);
        if (user.empty()) {
            continue;
        }
        corpus::DialogueState state;
        state.own_prev = own_prev;
        state.other_last = user;

        seq2seq::GenOptions gen;
        gen.min_len = 1;
        auto nbest = seq2seq::beam_search(state.to_source(), cfg.beam_width, cfg.max_len,
                                          ckpt.params, gen);
        if (bwd.has_value()) {
            nbest = mmi::rerank_nbest(nbest, state, ckpt.params, bwd->params);
        }
        const TokenSeq reply = nbest.front().tokens;
        std::printf("%s\n", corpus::decode_tokens(reply, ckpt.vocab).c_str());
        std::fflush(stdout);
        own_prev = rewards::strip_eos(reply);
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"reinforcement-learning dialogue generation pipeline"};
    app.require_subcommand(1);

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic dialogue corpus");
    std::uint64_t gen_seed = 0;
    int gen_n = 0;
    std::string gen_out;
    std::string gen_openers;
    gen->add_option("--seed", gen_seed, "generator seed")->required();
    gen->add_option("--n", gen_n, "number of dialogues")->required();
    gen->add_option("--out", gen_out, "output corpus file")->required();
    gen->add_option("--openers-out", gen_openers, "also write dialogue openers, one per line");

    // shared config/flag state
    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config_opts = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--config", config_path, "flat key = value config file");
        if (required) {
            opt->required();
        }
        cmd->add_option("--set", overrides, "override a config key, KEY=VALUE (repeatable)");
    };

    // train-mle
    auto* tmle = app.add_subcommand("train-mle", "supervised seq2seq training");
    std::string mle_corpus;
    std::string mle_out;
    std::string mle_direction = "forward";
    tmle->add_option("--corpus", mle_corpus, "corpus file")->required();
    add_config_opts(tmle, true);
    tmle->add_option("--out", mle_out, "output checkpoint")->required();
    tmle->add_option("--direction", mle_direction, "forward|backward (default forward)");

    // train-mmi
    auto* tmmi = app.add_subcommand("train-mmi", "mutual-information fine-tuning");
    std::string mmi_init;
    std::string mmi_backward;
    std::string mmi_out;
    tmmi->add_option("--init", mmi_init, "forward MLE checkpoint")->required();
    tmmi->add_option("--backward", mmi_backward, "backward MLE checkpoint")->required();
    add_config_opts(tmmi, true);
    tmmi->add_option("--out", mmi_out, "output checkpoint")->required();

    // train-rl
    auto* trl = app.add_subcommand("train-rl", "policy-gradient training over self-play");
    std::string rl_init;
    std::string rl_out;
    std::string rl_log;
    std::string rl_backward_flag;
    std::string rl_corpus_flag;
    trl->add_option("--init", rl_init, "MMI checkpoint")->required();
    add_config_opts(trl, true);
    trl->add_option("--out", rl_out, "output checkpoint")->required();
    trl->add_option("--log", rl_log, "training log file")->required();
    trl->add_option("--backward", rl_backward_flag, "backward model (overrides config)");
    trl->add_option("--corpus", rl_corpus_flag, "corpus file (overrides config)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "write self-play transcripts");
    std::string sim_model;
    std::string sim_inputs;
    std::string sim_out;
    int sim_max_turns = 8;
    sim->add_option("--model", sim_model, "checkpoint")->required();
    sim->add_option("--inputs", sim_inputs, "initial messages, one per line")->required();
    sim->add_option("--max-turns", sim_max_turns, "turn budget")->required();
    sim->add_option("--out", sim_out, "transcript output file")->required();
    add_config_opts(sim, false);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "dialogue length and diversity metrics");
    std::string ev_models;
    std::string ev_inputs;
    std::string ev_report;
    std::string ev_backward_flag;
    ev->add_option("--models", ev_models, "comma-separated checkpoints")->required();
    ev->add_option("--inputs", ev_inputs, "evaluation messages, one per line")->required();
    ev->add_option("--report", ev_report, "report output file")->required();
    ev->add_option("--backward", ev_backward_flag, "backward model for mmi rerank");
    add_config_opts(ev, false);

    // chat
    auto* chat = app.add_subcommand("chat", "interactive REPL");
    std::string chat_model;
    std::string chat_backward_flag;
    chat->add_option("--model", chat_model, "checkpoint")->required();
    chat->add_option("--backward", chat_backward_flag, "backward model for mmi rerank");
    add_config_opts(chat, false);

    std::vector<const char*> argv;
    argv.push_back("dialogue-rl");
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        }
        for (const std::string& kv : overrides) {
            const auto eq = kv.find('=');
            require(eq != std::string::npos, "--set expects KEY=VALUE");
            apply_override(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
        }
        apply_env_seed(cfg);
        cfg.validate();

        if (gen->parsed()) {
            return cmd_gen_corpus(gen_seed, gen_n, gen_out, gen_openers);
        }
        if (tmle->parsed()) {
            return cmd_train_mle(mle_corpus, cfg, mle_out, mle_direction);
        }
        if (tmmi->parsed()) {
            return cmd_train_mmi(mmi_init, mmi_backward, cfg, mmi_out);
        }
        if (trl->parsed()) {
            if (!rl_backward_flag.empty()) {
                cfg.backward_model = rl_backward_flag;
            }
            if (!rl_corpus_flag.empty()) {
                cfg.corpus_path = rl_corpus_flag;
            }
            return cmd_train_rl(rl_init, cfg, rl_out, rl_log);
        }
        if (sim->parsed()) {
            return cmd_simulate(sim_model, sim_inputs, sim_max_turns, sim_out, cfg);
        }
        if (ev->parsed()) {
            if (!ev_backward_flag.empty()) {
                cfg.backward_model = ev_backward_flag;
            }
            return cmd_evaluate(ev_models, ev_inputs, ev_report, cfg);
        }
        if (chat->parsed()) {
            if (!chat_backward_flag.empty()) {
                cfg.backward_model = chat_backward_flag;
            }
            return cmd_chat(chat_model, cfg);
        }
        std::fprintf(stderr, "error: no command\n");
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace dialogue_rl::cli
