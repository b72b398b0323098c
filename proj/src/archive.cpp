#include "phefl/archive.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>

#include "json.hpp"
#include "phefl/errors.hpp"
#include "phefl/version.hpp"

namespace phefl {

namespace {

using nlohmann::json;

std::int64_t archive_timestamp() {
    if (const char* pinned = std::getenv("SOURCE_DATE_EPOCH")) {
        std::int64_t value = 0;
        const char* last = pinned + std::string_view(pinned).size();
        const auto [ptr, ec] = std::from_chars(pinned, last, value);
        if (ec != std::errc{} || ptr != last) {
            throw ConfigError("SOURCE_DATE_EPOCH must be an integer, got \"" +
                              std::string(pinned) + "\"");
        }
        return value;
    }
    return static_cast<std::int64_t>(std::time(nullptr));
}

json round_to_json(const RoundRecord& record) {
    json alphas = json::array();
    for (const AlphaRecord& a : record.alphas) {
        alphas.push_back({{"edge", a.edge_id},
                          {"acc_edge", a.acc_edge},
                          {"acc_cloud", a.acc_cloud},
                          {"alpha", a.alpha},
                          {"round", a.round}});
    }
    return {{"round", record.round},
            {"edge_accuracy", record.edge_accuracy},
            {"mean_accuracy", record.mean_accuracy},
            {"alphas", std::move(alphas)}};
}

RoundRecord round_from_json(const json& j) {
    RoundRecord record;
    record.round = j.at("round").get<int>();
    record.edge_accuracy = j.at("edge_accuracy").get<std::vector<double>>();
    record.mean_accuracy = j.at("mean_accuracy").get<double>();
    for (const json& a : j.at("alphas")) {
        AlphaRecord alpha;
        alpha.edge_id = a.at("edge").get<int>();
        alpha.acc_edge = a.at("acc_edge").get<double>();
        alpha.acc_cloud = a.at("acc_cloud").get<double>();
        alpha.alpha = a.at("alpha").get<double>();
        alpha.round = a.at("round").get<int>();
        record.alphas.push_back(alpha);
    }
    return record;
}

}  // namespace

ArchiveWriter::ArchiveWriter(const std::string& path, const ExperimentConfig& config)
    : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open archive for writing: " + path);
    const json metadata = {{"format", "phefl-archive"},
                           {"version", 1},
                           {"tool_version", kVersion},
                           {"created_unix", archive_timestamp()},
                           {"config_text", serialize_config(config)}};
    write_line(metadata.dump());
}

ArchiveWriter::~ArchiveWriter() {
    if (closed_) return;
    try {
        abort("writer destroyed before finish");
    } catch (...) {
        // Destructors must not throw; the truncated file still reads back
        // as incomplete thanks to the missing/partial status line.
    }
}

void ArchiveWriter::append(const RoundRecord& record) {
    if (closed_) throw InvalidArgument("archive already closed: " + path_);
    write_line(round_to_json(record).dump());
}

void ArchiveWriter::finish() {
    close_with_status(json{{"status", "complete"}}.dump());
}

void ArchiveWriter::abort(const std::string& reason) {
    close_with_status(json{{"status", "incomplete"}, {"error", reason}}.dump());
}

void ArchiveWriter::write_line(const std::string& line) {
    out_ << line << '\n' << std::flush;
    if (!out_) throw IoError("write failed on archive: " + path_);
}

void ArchiveWriter::close_with_status(const std::string& status_line) {
    if (closed_) throw InvalidArgument("archive already closed: " + path_);
    write_line(status_line);
    closed_ = true;
    out_.close();
}

ArchiveData read_archive(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open archive: " + path);

    ArchiveData data;
    std::string line;
    int line_no = 0;
    bool saw_metadata = false;
    bool saw_status = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": not valid JSON (" +
                            e.what() + ")");
        }
        try {
            if (!saw_metadata) {
                if (j.value("format", "") != "phefl-archive") {
                    throw DataError(path + ": not a results archive (format marker missing)");
                }
                if (j.value("version", 0) != 1) {
                    throw DataError(path + ": unsupported archive version " +
                                    j.value("version", json()).dump());
                }
                data.config_text = j.at("config_text").get<std::string>();
                data.created_unix = j.at("created_unix").get<std::int64_t>();
                data.tool_version = j.value("tool_version", "");
                try {
                    data.config = parse_config_text(data.config_text);
                } catch (const ConfigError& e) {
                    throw DataError(path + ": embedded config: " + e.what());
                }
                saw_metadata = true;
            } else if (saw_status) {
                throw DataError(path + ": line " + std::to_string(line_no) +
                                ": record after the status line");
            } else if (j.contains("status")) {
                const std::string status = j.at("status").get<std::string>();
                if (status == "complete") {
                    data.complete = true;
                } else if (status == "incomplete") {
                    data.complete = false;
                    data.error = j.value("error", "");
                } else {
                    throw DataError(path + ": line " + std::to_string(line_no) +
                                    ": unknown status \"" + status + "\"");
                }
                saw_status = true;
            } else if (j.contains("round")) {
                data.log.push_back(round_from_json(j));
            } else {
                throw DataError(path + ": line " + std::to_string(line_no) +
                                ": unrecognized record");
            }
        } catch (const json::exception& e) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_metadata) throw DataError(path + ": empty archive (no metadata line)");
    if (!saw_status) {
        data.complete = false;
        data.error = "truncated archive: no status line";
    }
    return data;
}

}  // namespace phefl
