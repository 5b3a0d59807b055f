#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "tsf/rng.hpp"
#include "tsf/series.hpp"

namespace tsf::testing {

// Unique temp file that removes itself.
class TempFile {
public:
    explicit TempFile(const std::string& stem) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 (stem + "_" + std::to_string(++counter) + "_" + std::to_string(::getpid())))
                    .string();
    }
    ~TempFile() { std::remove(path_.c_str()); }
    const std::string& path() const { return path_; }

    void write(const std::string& content) {
        std::ofstream out(path_);
        out << content;
    }

private:
    std::string path_;
};

inline MultivariateSeries random_series(Eigen::Index t_len, Eigen::Index channels,
                                        std::uint64_t seed) {
    MultivariateSeries series;
    series.values.resize(t_len, channels);
    Rng rng(seed);
    for (Eigen::Index c = 0; c < channels; ++c)
        for (Eigen::Index t = 0; t < t_len; ++t) series.values(t, c) = rng.gaussian();
    for (Eigen::Index c = 0; c < channels; ++c)
        series.channel_names.push_back("ch" + std::to_string(c));
    return series;
}

}  // namespace tsf::testing
