#include "wmt/prediction.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "wmt/error.hpp"

namespace wmt {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const PredictionRecord& r) {
    ordered_json j;
    j["src"] = r.source;
    j["ref"] = r.reference;
    j["pred"] = r.prediction;
    j["mem"] = r.memory;
    j["flags"] = r.flags;
    j["tag"] = r.tag;
    j["epoch"] = r.epoch;
    j["seed"] = r.seed;
    return j;
}

}  // namespace

void write_prediction_dump(std::ostream& out, std::span<const PredictionRecord> records,
                           std::string_view header) {
    std::string line(header);
    std::replace(line.begin(), line.end(), '\n', ' ');
    out << "# " << line << '\n';
    for (const PredictionRecord& r : records) {
        out << to_json(r).dump() << '\n';
    }
    if (!out) {
        throw InputError("write_prediction_dump: stream write failed");
    }
}

void save_prediction_dump(const std::filesystem::path& path,
                          std::span<const PredictionRecord> records, std::string_view header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write prediction dump " + path.string());
    }
    write_prediction_dump(out, records, header);
}

std::vector<PredictionRecord> read_prediction_dump(std::istream& in, std::string_view origin) {
    std::vector<PredictionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
        PredictionRecord r;
        try {
            const auto j = nlohmann::json::parse(line);
            r.source = j.at("src").get<std::string>();
            r.reference = j.value("ref", std::string());
            r.prediction = j.at("pred").get<std::string>();
            r.memory = j.at("mem").get<std::vector<std::string>>();
            for (int f : j.at("flags").get<std::vector<int>>()) {
                if (f != 0 && f != 1) {
                    throw InputError(where + "flag values must be 0 or 1");
                }
                r.flags.push_back(static_cast<std::uint8_t>(f));
            }
            r.tag = j.at("tag").get<std::string>();
            r.epoch = j.at("epoch").get<std::size_t>();
            r.seed = j.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + e.what());
        }
        const auto zeros = static_cast<std::size_t>(std::count(r.flags.begin(), r.flags.end(), 0));
        if (zeros != r.memory.size()) {
            throw InputError(where + std::to_string(r.memory.size()) + " memory tokens but " +
                             std::to_string(zeros) + " zero flags");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<PredictionRecord> load_prediction_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open prediction dump " + path.string());
    }
    return read_prediction_dump(in, path.string());
}

}  // namespace wmt
