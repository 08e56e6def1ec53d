#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "gazezone/core/types.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("gazezone_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random drive: monotone timestamps with occasional equal stamps and long
/// pauses, zones changing in runs.
inline std::vector<gazezone::LabeledSample> random_drive(std::mt19937_64& rng, const std::string& subject,
                                                         const std::string& drive, int frames) {
    std::vector<gazezone::LabeledSample> out;
    double t = uniform_real(rng, 0.0, 5.0);
    int zone = uniform_int(rng, 0, gazezone::kNumZones - 1);
    for (int i = 0; i < frames; ++i) {
        if (uniform_int(rng, 0, 9) == 0) zone = uniform_int(rng, 0, gazezone::kNumZones - 1);
        const int step = uniform_int(rng, 0, 20);
        if (step == 0) {
        } else if (step == 1) {
            t += uniform_real(rng, 1.0, 40.0);
        } else {
            t += 0.1;
        }
        gazezone::LabeledSample s;
        s.frame_ref = drive + "/" + std::to_string(i) + ".png";
        s.subject_id = subject;
        s.drive_id = drive;
        s.timestamp = t;
        s.zone = gazezone::zone_from_ordinal(zone);
        out.push_back(s);
    }
    return out;
}

}  // namespace testing
