#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pbt/json_codec.hpp"

namespace pbt {

// Append-only log of per-study state transitions: one record per line, each
// a tagged JSON object. Loading a study replays (compacts) its log.
class TrialStore {
public:
    virtual ~TrialStore() = default;
    virtual void append(const std::string& study_id, const Json& record) = 0;
    virtual std::vector<Json> read_all(const std::string& study_id) const = 0;
    virtual bool exists(const std::string& study_id) const = 0;
    virtual std::vector<std::string> list_studies() const = 0;
};

// One .log file per study under a data directory; every append is flushed
// before the caller observes success.
class FileTrialStore : public TrialStore {
public:
    explicit FileTrialStore(std::filesystem::path data_dir);
    void append(const std::string& study_id, const Json& record) override;
    std::vector<Json> read_all(const std::string& study_id) const override;
    bool exists(const std::string& study_id) const override;
    std::vector<std::string> list_studies() const override;

    std::filesystem::path log_path(const std::string& study_id) const;

private:
    std::filesystem::path data_dir_;
    mutable std::mutex mutex_;
};

// In-memory store with the same replayable-record semantics; used by the
// bench and by tests that simulate process restarts without touching disk.
class MemoryTrialStore : public TrialStore {
public:
    void append(const std::string& study_id, const Json& record) override;
    std::vector<Json> read_all(const std::string& study_id) const override;
    bool exists(const std::string& study_id) const override;
    std::vector<std::string> list_studies() const override;

private:
    std::map<std::string, std::vector<Json>> logs_;
    mutable std::mutex mutex_;
};

}  // namespace pbt
