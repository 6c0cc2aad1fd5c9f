#include "pbt/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "pbt/json_codec.hpp"

namespace pbt {

std::string checkpoint_path(const std::string& study_id, TrialId trial_id,
                            std::int64_t step) {
    return study_id + "/" + std::to_string(trial_id) + "/ckpt-" + std::to_string(step);
}

RestoreReport smart_restore(const Checkpoint& checkpoint,
                            std::map<std::string, Tensor>& model_variables) {
    RestoreReport report;
    for (auto& [name, tensor] : model_variables) {
        auto it = checkpoint.variables.find(name);
        if (it == checkpoint.variables.end()) {
            report.missing.push_back(name);
        } else if (!it->second.same_shape(tensor)) {
            report.shape_mismatched.push_back(name);
        } else {
            tensor = it->second;
            report.matched.push_back(name);
        }
    }
    return report;
}

FileCheckpointStore::FileCheckpointStore(std::filesystem::path root)
    : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path FileCheckpointStore::dir_for(const std::string& path) const {
    if (path.empty() || path.find("..") != std::string::npos) {
        throw std::invalid_argument("unsafe checkpoint path: " + path);
    }
    return root_ / path;
}

void FileCheckpointStore::save(const Checkpoint& checkpoint) {
    auto dir = dir_for(checkpoint.path);
    std::filesystem::create_directories(dir);
    Json manifest{{"step", checkpoint.step},
                  {"trial_id", checkpoint.trial_id},
                  {"variables", Json::object()}};
    for (const auto& [name, tensor] : checkpoint.variables) {
        const std::string file = name + ".bin";
        manifest["variables"][name] = {{"shape", tensor.shape}, {"file", file}};
        std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(tensor.values.data()),
                  static_cast<std::streamsize>(tensor.values.size() * sizeof(double)));
        if (!out) throw std::runtime_error("checkpoint write failed: " + checkpoint.path);
    }
    std::ofstream mf(dir / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    if (!mf) throw std::runtime_error("manifest write failed: " + checkpoint.path);
}

Checkpoint FileCheckpointStore::load(const std::string& path) const {
    auto dir = dir_for(path);
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("no checkpoint at " + path);
    Json manifest = Json::parse(mf);
    Checkpoint checkpoint;
    checkpoint.path = path;
    checkpoint.step = manifest.at("step").get<std::int64_t>();
    checkpoint.trial_id = manifest.at("trial_id").get<TrialId>();
    for (auto it = manifest.at("variables").begin(); it != manifest.at("variables").end();
         ++it) {
        Tensor tensor;
        tensor.shape = it.value().at("shape").get<std::vector<std::int64_t>>();
        std::int64_t count = 1;
        for (auto d : tensor.shape) count *= d;
        tensor.values.resize(static_cast<std::size_t>(count));
        std::ifstream in(dir / it.value().at("file").get<std::string>(), std::ios::binary);
        in.read(reinterpret_cast<char*>(tensor.values.data()),
                static_cast<std::streamsize>(tensor.values.size() * sizeof(double)));
        if (!in) throw std::runtime_error("tensor read failed in " + path);
        checkpoint.variables[it.key()] = std::move(tensor);
    }
    return checkpoint;
}

bool FileCheckpointStore::exists(const std::string& path) const {
    return std::filesystem::exists(dir_for(path) / "manifest.json");
}

bool FileCheckpointStore::remove(const std::string& path) {
    auto dir = dir_for(path);
    if (!std::filesystem::exists(dir)) return false;
    std::filesystem::remove_all(dir);
    return true;
}

std::vector<std::string> FileCheckpointStore::list(const std::string& study_id) const {
    std::vector<std::string> paths;
    auto base = root_ / study_id;
    if (!std::filesystem::exists(base)) return paths;
    for (const auto& trial_dir : std::filesystem::directory_iterator(base)) {
        if (!trial_dir.is_directory()) continue;
        for (const auto& ckpt_dir : std::filesystem::directory_iterator(trial_dir)) {
            if (std::filesystem::exists(ckpt_dir.path() / "manifest.json")) {
                paths.push_back(study_id + "/" + trial_dir.path().filename().string() +
                                "/" + ckpt_dir.path().filename().string());
            }
        }
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

void MemoryCheckpointStore::save(const Checkpoint& checkpoint) {
    std::lock_guard<std::mutex> lock(mutex_);
    checkpoints_[checkpoint.path] = checkpoint;
}

Checkpoint MemoryCheckpointStore::load(const std::string& path) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = checkpoints_.find(path);
    if (it == checkpoints_.end()) throw std::runtime_error("no checkpoint at " + path);
    return it->second;
}

bool MemoryCheckpointStore::exists(const std::string& path) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return checkpoints_.count(path) != 0;
}

bool MemoryCheckpointStore::remove(const std::string& path) {
    std::lock_guard<std::mutex> lock(mutex_);
    return checkpoints_.erase(path) != 0;
}

std::vector<std::string> MemoryCheckpointStore::list(const std::string& study_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> paths;
    const std::string prefix = study_id + "/";
    for (const auto& [path, _] : checkpoints_) {
        if (path.rfind(prefix, 0) == 0) paths.push_back(path);
    }
    return paths;
}

}  // namespace pbt
