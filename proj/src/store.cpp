#include "pbt/store.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pbt {

FileTrialStore::FileTrialStore(std::filesystem::path data_dir)
    : data_dir_(std::move(data_dir)) {
    std::filesystem::create_directories(data_dir_ / "studies");
}

std::filesystem::path FileTrialStore::log_path(const std::string& study_id) const {
    if (study_id.empty() || study_id.find('/') != std::string::npos ||
        study_id.find("..") != std::string::npos) {
        throw std::invalid_argument("unsafe study id: " + study_id);
    }
    return data_dir_ / "studies" / (study_id + ".log");
}

void FileTrialStore::append(const std::string& study_id, const Json& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(log_path(study_id), std::ios::app);
    if (!out) throw std::runtime_error("cannot open study log for " + study_id);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for study log " + study_id);
}

std::vector<Json> FileTrialStore::read_all(const std::string& study_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<Json> records;
    std::ifstream in(log_path(study_id));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(Json::parse(line));
    }
    return records;
}

bool FileTrialStore::exists(const std::string& study_id) const {
    return std::filesystem::exists(log_path(study_id));
}

std::vector<std::string> FileTrialStore::list_studies() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_ / "studies")) {
        if (entry.path().extension() == ".log") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void MemoryTrialStore::append(const std::string& study_id, const Json& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    logs_[study_id].push_back(record);
}

std::vector<Json> MemoryTrialStore::read_all(const std::string& study_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = logs_.find(study_id);
    return it == logs_.end() ? std::vector<Json>{} : it->second;
}

bool MemoryTrialStore::exists(const std::string& study_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return logs_.count(study_id) != 0;
}

std::vector<std::string> MemoryTrialStore::list_studies() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : logs_) ids.push_back(id);
    return ids;
}

}  // namespace pbt
