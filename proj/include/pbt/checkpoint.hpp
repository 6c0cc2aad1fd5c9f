#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pbt/study.hpp"

namespace pbt {

struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> values;  // flat, row-major

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Named-variable snapshot of trainable state. Addressed by a store-relative
// path "<study_id>/<trial_id>/ckpt-<step>".
struct Checkpoint {
    std::string path;
    std::map<std::string, Tensor> variables;
    std::int64_t step = 0;
    TrialId trial_id = 0;
};

std::string checkpoint_path(const std::string& study_id, TrialId trial_id,
                            std::int64_t step);

class CheckpointStore {
public:
    virtual ~CheckpointStore() = default;
    virtual void save(const Checkpoint& checkpoint) = 0;
    virtual Checkpoint load(const std::string& path) const = 0;  // throws if absent
    virtual bool exists(const std::string& path) const = 0;
    virtual bool remove(const std::string& path) = 0;  // idempotent; false if absent
    virtual std::vector<std::string> list(const std::string& study_id) const = 0;
};

// Directory layout: root/<path>/manifest.json plus one flat little-endian
// binary file of doubles per variable.
class FileCheckpointStore : public CheckpointStore {
public:
    explicit FileCheckpointStore(std::filesystem::path root);
    void save(const Checkpoint& checkpoint) override;
    Checkpoint load(const std::string& path) const override;
    bool exists(const std::string& path) const override;
    bool remove(const std::string& path) override;
    std::vector<std::string> list(const std::string& study_id) const override;

private:
    std::filesystem::path dir_for(const std::string& path) const;
    std::filesystem::path root_;
};

class MemoryCheckpointStore : public CheckpointStore {
public:
    void save(const Checkpoint& checkpoint) override;
    Checkpoint load(const std::string& path) const override;
    bool exists(const std::string& path) const override;
    bool remove(const std::string& path) override;
    std::vector<std::string> list(const std::string& study_id) const override;

private:
    std::map<std::string, Checkpoint> checkpoints_;
    mutable std::mutex mutex_;
};

struct RestoreReport {
    std::vector<std::string> matched;
    std::vector<std::string> shape_mismatched;
    std::vector<std::string> missing;  // wanted by the model, absent in ckpt
};

// Restores every model variable whose name exists in the checkpoint with a
// matching shape; everything else keeps its current (fresh) initialization.
RestoreReport smart_restore(const Checkpoint& checkpoint,
                            std::map<std::string, Tensor>& model_variables);

}  // namespace pbt
