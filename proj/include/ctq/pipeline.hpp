#pragma once

#include "ctq/multistream.hpp"
#include "ctq/quantizer.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ctq {

// Container layout, little-endian:
//   "CTQ1"  u16 version  u32 n_t  u8 depth  f64 gamma  u8 q1  u8 q2  u16 m3
//   u16 amp_levels  u16 ang_levels
//   u16 len + bytes  (amplitude compander record)
//   u16 len + bytes  (phase compander record)
//   u8 strategy  u64 payload_bits  payload bytes
// The payload starts with a preamble (frame counts, training count, coding
// cadence, fallback policy, decay), then the training symbols at fixed width,
// then the coded timesteps.
struct ContainerHeader {
    uint16_t version = 1;
    uint32_t n_t = 0;
    uint8_t depth = 0;
    double gamma = 0.5;
    uint8_t q1 = 0;
    uint8_t q2 = 1;
    uint16_t m3 = 2;
    uint16_t amp_levels = 2;
    uint16_t ang_levels = 2;
    std::string amp_record;
    std::string ang_record;
    uint8_t strategy = 0;
    uint64_t payload_bits = 0;
};

std::vector<uint8_t> serialize_header(const ContainerHeader& h);
// Returns the header and the offset of the payload bytes.
std::pair<ContainerHeader, size_t> parse_header(const std::vector<uint8_t>& bytes);

struct PipelineConfig {
    QuantizerConfig quant;
    JointConfig joint;
    double training_fraction = 0.2;
};

struct CompressResult {
    std::vector<uint8_t> container;
    RateReport report;            // coded timesteps only
    uint64_t preamble_bits = 0;
    uint64_t training_bits = 0;
    uint64_t payload_bits = 0;
    Eigen::Index training_frames = 0;
    Eigen::Index coded_frames = 0;
    int n_t = 1;
    double coded_bits_per_antenna() const;
};

CompressResult compress_sequence(const Eigen::MatrixXcd& frames, const PipelineConfig& cfg);

struct DecompressResult {
    Eigen::MatrixXcd frames;      // all reconstructed frames, training included
    RateReport report;
    ContainerHeader header;
    Eigen::Index training_frames = 0;
};

DecompressResult decompress_container(const std::vector<uint8_t>& bytes);

void write_container_file(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> read_container_file(const std::string& path);

struct EvalConfig {
    std::vector<int> codebook_sizes = {16, 64};
    CompanderFamily family = CompanderFamily::BetaLaw;
    bool adjust = true;
    double training_fraction = 0.2;
    int depth = 2;
    double gamma = 0.5;
    unsigned q = 1;
    uint32_t m3 = 4;
    uint64_t update_interval = 100;
    FallbackPolicy fallback_update = FallbackPolicy::Reproject;
    std::optional<DecayConfig> decay;
};

struct EvalPoint {
    std::string strategy;    // uncompressed, ctm_individual, ctm_simple_joint,
                             // ctm_ct_indicator, ctw_ideal
    int amp_levels = 0;
    int ang_levels = 0;
    double bits_per_antenna = 0.0;
    double mscd = 0.0;
};

// Rate and distortion per strategy and codebook size; distortion is measured
// on the coded region against the input frames.
std::vector<EvalPoint> evaluate_sweep(const Eigen::MatrixXcd& frames, const EvalConfig& cfg);

// Pareto filter: keeps points no other point dominates in (bits, distortion).
std::vector<EvalPoint> pareto_envelope(const std::vector<EvalPoint>& points);

} // namespace ctq
