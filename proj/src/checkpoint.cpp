#include "dialogue_rl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dialogue_rl::checkpoint {

namespace {

constexpr const char* kMagic = "dialogue-rl checkpoint v1";
constexpr const char* kSentinel = "===PARAMS===";

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_f32_le(std::ofstream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xFF),
        static_cast<unsigned char>((bits >> 8) & 0xFF),
        static_cast<unsigned char>((bits >> 16) & 0xFF),
        static_cast<unsigned char>((bits >> 24) & 0xFF),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

float read_f32_le(const unsigned char* bytes) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::mle: return "mle";
        case Stage::mmi: return "mmi";
        case Stage::rl: return "rl";
    }
    return "unknown";
}

const char* kind_name(Kind k) {
    return k == Kind::forward ? "forward" : "backward";
}

Stage parse_stage(const std::string& s) {
    if (s == "mle") {
        return Stage::mle;
    }
    if (s == "mmi") {
        return Stage::mmi;
    }
    if (s == "rl") {
        return Stage::rl;
    }
    throw CheckpointError(ErrorCode::manifest_error, "unknown stage tag: " + s);
}

std::uint64_t vocab_hash(const corpus::Vocab& vocab) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001B3ull;
    };
    for (const std::string& tok : vocab.id_to_token) {
        for (unsigned char c : tok) {
            mix(c);
        }
        mix('\n');
    }
    return h;
}

void save(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError(ErrorCode::io_error, "cannot write checkpoint: " + path);
    }

    out << kMagic << "\n";
    out << "kind = " << kind_name(ckpt.kind) << "\n";
    out << "stage = " << stage_name(ckpt.stage) << "\n";
    out << "vocab_size = " << ckpt.params.vocab_size << "\n";
    out << "hidden_size = " << ckpt.params.hidden_size << "\n";
    out << "layers = 1\n";
    out << "vocab_hash = " << hex64(vocab_hash(ckpt.vocab)) << "\n";

    out << "params =";
    for (const auto& [name, m] : ckpt.params.param_views()) {
        out << " " << name << ":" << m->rows << "x" << m->cols;
    }
    out << "\n";

    out << "vocab_begin\n";
    for (const std::string& tok : ckpt.vocab.id_to_token) {
        out << tok << "\n";
    }
    out << "vocab_end\n";
    out << kSentinel << "\n";

    for (const auto& [name, m] : ckpt.params.param_views()) {
        (void)name;
        for (double v : m->data) {
            write_f32_le(out, static_cast<float>(v));
        }
    }
    if (!out) {
        throw CheckpointError(ErrorCode::io_error, "write failed: " + path);
    }
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError(ErrorCode::io_error, "cannot open checkpoint: " + path);
    }

    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw CheckpointError(ErrorCode::version_mismatch,
                              "bad checkpoint magic/version in " + path);
    }

    std::string kind_str;
    std::string stage_str;
    std::string hash_str;
    std::string params_decl;
    int vocab_size = -1;
    int hidden_size = -1;
    std::vector<std::string> vocab_tokens;
    bool seen_sentinel = false;

    while (std::getline(in, line)) {
        if (line == kSentinel) {
            seen_sentinel = true;
            break;
        }
        if (line == "vocab_begin") {
            while (std::getline(in, line) && line != "vocab_end") {
                vocab_tokens.push_back(line);
            }
            continue;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) {
            continue;
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "kind") {
            kind_str = value;
        } else if (key == "stage") {
            stage_str = value;
        } else if (key == "vocab_size") {
            vocab_size = std::stoi(value);
        } else if (key == "hidden_size") {
            hidden_size = std::stoi(value);
        } else if (key == "vocab_hash") {
            hash_str = value;
        } else if (key == "params") {
            params_decl = value;
        }
    }
    if (!seen_sentinel || vocab_size <= 0 || hidden_size <= 0 || kind_str.empty() ||
        stage_str.empty() || params_decl.empty()) {
        throw CheckpointError(ErrorCode::manifest_error, "incomplete manifest in " + path);
    }
    if (static_cast<int>(vocab_tokens.size()) != vocab_size) {
        throw CheckpointError(ErrorCode::manifest_error, "vocab size mismatch in " + path);
    }

    Checkpoint ckpt;
    ckpt.kind = kind_str == "forward" ? Kind::forward : Kind::backward;
    if (kind_str != "forward" && kind_str != "backward") {
        throw CheckpointError(ErrorCode::manifest_error, "unknown kind tag: " + kind_str);
    }
    ckpt.stage = parse_stage(stage_str);
    ckpt.vocab = corpus::Vocab::from_tokens(vocab_tokens);

    if (hex64(vocab_hash(ckpt.vocab)) != hash_str) {
        throw CheckpointError(ErrorCode::hash_mismatch, "vocab hash mismatch in " + path);
    }

    // Shape the parameter arrays from the manifest declarations.
    ckpt.params = seq2seq::ModelParams::shaped(vocab_size, hidden_size);
    auto views = ckpt.params.param_views();
    std::istringstream decl(params_decl);
    std::string item;
    std::size_t idx = 0;
    std::size_t total_values = 0;
    while (decl >> item) {
        if (idx >= views.size()) {
            throw CheckpointError(ErrorCode::manifest_error, "too many parameter arrays declared");
        }
        const auto colon = item.find(':');
        const auto x = item.find('x', colon);
        if (colon == std::string::npos || x == std::string::npos) {
            throw CheckpointError(ErrorCode::manifest_error, "bad parameter declaration: " + item);
        }
        const std::string name = item.substr(0, colon);
        const int rows = std::stoi(item.substr(colon + 1, x - colon - 1));
        const int cols = std::stoi(item.substr(x + 1));
        if (name != views[idx].first || rows != views[idx].second->rows ||
            cols != views[idx].second->cols) {
            throw CheckpointError(ErrorCode::length_mismatch,
                                  "parameter shape mismatch for " + name);
        }
        total_values += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
        ++idx;
    }
    if (idx != views.size()) {
        throw CheckpointError(ErrorCode::manifest_error, "missing parameter declarations");
    }

    std::vector<unsigned char> blob(total_values * 4);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<long>(blob.size()));
    if (static_cast<std::size_t>(in.gcount()) != blob.size()) {
        throw CheckpointError(ErrorCode::length_mismatch, "truncated parameter blob in " + path);
    }
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1) {
        throw CheckpointError(ErrorCode::length_mismatch, "trailing bytes after blob in " + path);
    }

    std::size_t offset = 0;
    for (auto& [name, m] : views) {
        (void)name;
        for (double& v : m->data) {
            v = static_cast<double>(read_f32_le(blob.data() + offset));
            offset += 4;
        }
    }
    return ckpt;
}

} // namespace dialogue_rl::checkpoint
