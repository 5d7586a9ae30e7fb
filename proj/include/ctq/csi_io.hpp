#pragma once

#include <Eigen/Core>
#include <string>

namespace ctq {

// Binary layout, little-endian: "CSI1", u32 n_t, u64 n_frames, then
// n_frames * n_t complex entries as f64 re/im pairs, frame by frame.
void write_csi(const std::string& path, const Eigen::MatrixXcd& frames);

// One row per frame, re/im interleaved columns.
void write_csi_csv(const std::string& path, const Eigen::MatrixXcd& frames);

// Accepts either layout; the binary magic decides.
Eigen::MatrixXcd read_csi(const std::string& path);

} // namespace ctq
