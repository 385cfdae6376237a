#include "wmt/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "wmt/error.hpp"

namespace wmt {

namespace {

constexpr std::string_view kMagic = "wmt-checkpoint";
constexpr int kVersion = 1;

void write_block(std::ostream& out, std::string_view name, const KeyValueConfig& kv) {
    out << name << ' ' << kv.entries().size() << '\n';
    for (const auto& [key, value] : kv.entries()) {
        out << key << '=' << value << '\n';
    }
}

class Reader {
public:
    Reader(std::istream& in, std::string_view origin) : in_(in), origin_(origin) {}

    std::string line() {
        std::string s;
        if (!std::getline(in_, s)) {
            fail("unexpected end of file");
        }
        ++line_no_;
        if (!s.empty() && s.back() == '\r') {
            s.pop_back();
        }
        return s;
    }

    KeyValueConfig block(std::string_view name) {
        std::istringstream header(line());
        std::string word;
        std::size_t n = 0;
        if (!(header >> word >> n) || word != name) {
            fail("expected '" + std::string(name) + " <count>'");
        }
        std::string text;
        for (std::size_t i = 0; i < n; ++i) {
            text += line();
            text += '\n';
        }
        return KeyValueConfig::parse(text, origin_);
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw InputError(std::string(origin_) + ":" + std::to_string(line_no_) + ": " + message);
    }

    std::istream& stream() { return in_; }
    void count_lines(std::size_t n) { line_no_ += n; }

private:
    std::istream& in_;
    std::string_view origin_;
    std::size_t line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
    out << kMagic << ' ' << kVersion << '\n';
    write_block(out, "config", checkpoint.config.to_key_value());
    write_block(out, "metadata", checkpoint.metadata);
    char buf[40];
    for (const auto& [name, tensor] : checkpoint.params.named_parameters()) {
        out << "param " << name << ' ' << tensor.rank();
        for (std::size_t dim : tensor.shape()) {
            out << ' ' << dim;
        }
        out << '\n';
        const auto values = tensor.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a", values[i]);
            out << buf << ((i + 1) % 8 == 0 || i + 1 == values.size() ? '\n' : ' ');
        }
    }
    out << "end\n";
    if (!out) {
        throw InputError("write_checkpoint: stream write failed");
    }
}

Checkpoint read_checkpoint(std::istream& in, std::string_view origin) {
    Reader reader(in, origin);
    {
        std::istringstream header(reader.line());
        std::string magic;
        int version = 0;
        if (!(header >> magic >> version) || magic != kMagic) {
            reader.fail("not a wmt checkpoint");
        }
        if (version != kVersion) {
            reader.fail("unsupported checkpoint version " + std::to_string(version));
        }
    }
    Checkpoint ckpt;
    ckpt.config = ModelConfig::from_key_value(reader.block("config"));
    ckpt.metadata = reader.block("metadata");
    ckpt.params = zero_params(ckpt.config);

    std::map<std::string, Tensor> expected;
    for (auto& [name, tensor] : ckpt.params.named_parameters()) {
        expected.emplace(name, tensor);
    }
    for (;;) {
        const std::string header_line = reader.line();
        if (header_line == "end") {
            break;
        }
        std::istringstream header(header_line);
        std::string word;
        std::string name;
        std::size_t rank = 0;
        if (!(header >> word >> name >> rank) || word != "param") {
            reader.fail("expected 'param <name> <rank> <dims...>' or 'end'");
        }
        Shape shape(rank);
        for (std::size_t& dim : shape) {
            if (!(header >> dim)) {
                reader.fail("parameter '" + name + "' is missing a dimension");
            }
        }
        const auto it = expected.find(name);
        if (it == expected.end()) {
            reader.fail("unknown parameter '" + name + "'");
        }
        if (it->second.shape() != shape) {
            reader.fail("parameter '" + name + "' has shape " + shape_string(shape) +
                        " but the config implies " + shape_string(it->second.shape()));
        }
        auto values = it->second.mutable_values();
        std::string token;
        for (double& v : values) {
            if (!(reader.stream() >> token)) {
                reader.fail("truncated values for '" + name + "'");
            }
            char* end = nullptr;
            v = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size() || !std::isfinite(v)) {
                reader.fail("bad number '" + token + "' in '" + name + "'");
            }
        }
        std::string rest;
        std::getline(reader.stream(), rest);
        reader.count_lines((values.size() + 7) / 8);
        expected.erase(it);
    }
    if (!expected.empty()) {
        reader.fail("missing parameter '" + expected.begin()->first + "'");
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write checkpoint " + path.string());
    }
    write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open checkpoint " + path.string());
    }
    return read_checkpoint(in, path.string());
}

}  // namespace wmt
