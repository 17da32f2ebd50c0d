#pragma once

#include "dialogue_rl/corpus.hpp"
#include "dialogue_rl/seq2seq.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dialogue_rl::checkpoint {

enum class Stage { mle, mmi, rl };
enum class Kind { forward, backward };

const char* stage_name(Stage s);
const char* kind_name(Kind k);
Stage parse_stage(const std::string& s);

struct Checkpoint {
    seq2seq::ModelParams params;
    corpus::Vocab vocab;
    Stage stage = Stage::mle;
    Kind kind = Kind::forward;
};

enum class ErrorCode { version_mismatch, manifest_error, hash_mismatch, length_mismatch, io_error };

class CheckpointError : public std::runtime_error {
public:
    CheckpointError(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code(code) {}
    ErrorCode code;
};

/// FNV-1a over the newline-joined vocabulary tokens.
std::uint64_t vocab_hash(const corpus::Vocab& vocab);

/// File layout: a human-readable manifest (format version, kind, stage,
/// dims, vocab hash, parameter shapes, the vocabulary itself), a fixed
/// sentinel line, then the arrays as little-endian IEEE-754 float32 in the
/// manifest-declared order.
void save(const Checkpoint& ckpt, const std::string& path);
Checkpoint load(const std::string& path);

} // namespace dialogue_rl::checkpoint
