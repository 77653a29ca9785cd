#ifndef EGN_COMPARE_HPP
#define EGN_COMPARE_HPP

#include <string>
#include <vector>

#include "egn/train.hpp"

namespace egn {

/// Optional experiment mode: the equivariant model against a classical
/// baseline on the invariant-energy task, across several training-set sizes.
/// The baseline is a generic block stack fed the raw coordinates as extra
/// node attributes, which breaks the no-absolute-information assumption on
/// purpose. No threshold is attached to the outcome; the harness only
/// reports the losses.
struct CompareConfig {
    Eigen::Index node_count = 5;
    Eigen::Index coord_dim = 2;
    std::vector<Eigen::Index> train_sizes = {16, 64, 256};
    Eigen::Index eval_count = 64;
    Eigen::Index block_count = 2;
    Eigen::Index hidden_width = 32;
    Eigen::Index epochs = 30;
    double learning_rate = 3e-3;
    Eigen::Index batch_size = 16;
    std::uint64_t seed = 0;
};

struct CompareRow {
    Eigen::Index train_size = 0;
    std::string model; // "egn" or "gn_baseline"
    double train_loss = 0.0;
    double eval_loss = 0.0;
};

std::vector<CompareRow> run_comparison(const CompareConfig& cfg);

} // namespace egn

#endif // EGN_COMPARE_HPP
