#ifndef PHEFL_ARCHIVE_HPP
#define PHEFL_ARCHIVE_HPP

#include <cstdint>
#include <fstream>
#include <string>

#include "phefl/config.hpp"
#include "phefl/record.hpp"

namespace phefl {

// Writes one results file: a metadata line (resolved config, tool version,
// timestamp), one line per completed round, and a closing status line — all
// single-line JSON. Doubles are stored in shortest round-trip decimal form,
// so re-reading reproduces every value bit-for-bit.
class ArchiveWriter {
public:
    // Opens `path` and emits the metadata line immediately. The timestamp
    // comes from SOURCE_DATE_EPOCH when set (the reproducible-builds
    // convention), otherwise from the wall clock.
    ArchiveWriter(const std::string& path, const ExperimentConfig& config);

    // Marks the archive incomplete (best effort) if neither finish nor
    // abort ran, so a crashed run never masquerades as a finished one.
    ~ArchiveWriter();

    ArchiveWriter(const ArchiveWriter&) = delete;
    ArchiveWriter& operator=(const ArchiveWriter&) = delete;

    // Appends one round record and flushes. Wall time is deliberately not
    // stored: it would break byte-comparability between identical runs.
    void append(const RoundRecord& record);

    // Writes {"status":"complete"} and closes. Further calls throw.
    void finish();

    // Writes an incomplete status carrying `reason` and closes.
    void abort(const std::string& reason);

private:
    void write_line(const std::string& line);
    void close_with_status(const std::string& status_line);

    std::string path_;
    std::ofstream out_;
    bool closed_ = false;
};

// Fully parsed archive contents.
struct ArchiveData {
    ExperimentConfig config;        // parsed back from the embedded text
    std::string config_text;        // exactly as stored
    std::int64_t created_unix = 0;
    std::string tool_version;
    RoundLog log;                   // wall_time_seconds is 0 (never stored)
    bool complete = false;
    std::string error;              // failure reason when incomplete
};

// Reads an archive back. Structural problems (wrong format marker, garbage
// lines, records after the status line) throw DataError naming the line;
// a missing status line yields complete=false rather than an exception, so
// interrupted runs remain inspectable.
ArchiveData read_archive(const std::string& path);

}  // namespace phefl

#endif  // PHEFL_ARCHIVE_HPP
