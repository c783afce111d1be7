#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lmlreg {

using Mask = unsigned;
using LatticeMatrix = Eigen::MatrixXd;

class SubsetLattice;

// Lightweight view of one subset of a lattice's ground set.
class Subset {
public:
    Subset(const SubsetLattice& lattice, Mask mask) : lattice_(&lattice), mask_(mask) {}

    Mask mask() const noexcept { return mask_; }
    int cardinality() const noexcept;
    bool contains(int element) const noexcept { return (mask_ >> element) & 1u; }
    bool is_subset_of(Mask other) const noexcept { return (mask_ & ~other) == 0; }

    // Both in increasing-mask order.
    std::vector<Mask> subsets() const;
    std::vector<Mask> supersets() const;

    std::string str() const;

private:
    const SubsetLattice* lattice_;
    Mask mask_;
};

// The 2^n subsets of an ordered ground set. Subset k is the bitmask whose
// bit i marks element i; mask 0 is the empty set.
class SubsetLattice {
public:
    static constexpr int kMaxGroundSize = 20;
    static constexpr int kMaxDenseGroundSize = 12;

    explicit SubsetLattice(std::vector<std::string> labels);
    // Labels default to "1", "2", ...
    explicit SubsetLattice(int ground_size);

    int ground_size() const noexcept { return static_cast<int>(labels_.size()); }
    std::size_t size() const noexcept { return std::size_t{1} << labels_.size(); }
    Mask full() const noexcept { return static_cast<Mask>(size() - 1); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    Subset subset(Mask mask) const;

    // Brace notation, "{b,d}"; the empty set renders as "{}".
    std::string format(Mask mask) const;
    // Inverse of format; accepts "{}" and "{b, d}" style spacing.
    Mask parse(const std::string& text) const;

    // Masks ordered by cardinality, then by mask. This is the display order
    // of the tables the library prints.
    std::vector<Mask> graded_order() const;

    LatticeMatrix zeta_matrix() const;
    LatticeMatrix mobius_matrix() const;

    bool operator==(const SubsetLattice& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
};

inline int popcount(Mask m) noexcept { return __builtin_popcount(m); }

// Fast transforms on a row vector x indexed by subsets, all O(n 2^n).
//   zeta:            x Z   (y[H] = sum over E subset of H of x[E])
//   mobius:          x M   (inverse of zeta)
//   superset_zeta:   Z x   (y[E] = sum over H superset of E of x[H])
//   superset_mobius: M x   (inverse of superset_zeta)
void zeta_transform(std::span<double> x);
void mobius_transform(std::span<double> x);
void superset_zeta_transform(std::span<double> x);
void superset_mobius_transform(std::span<double> x);

std::vector<double> zeta_transform_cols(std::vector<double> x);
std::vector<double> mobius_transform_cols(std::vector<double> x);

// Matrix forms of the same maps. "right" acts across columns (on each row),
// "left" acts down rows (on each column).
void right_zeta(Eigen::MatrixXd& m);        // m <- m Z
void right_mobius(Eigen::MatrixXd& m);      // m <- m M
void right_zeta_t(Eigen::MatrixXd& m);      // m <- m Z^T
void left_zeta(Eigen::MatrixXd& m);         // m <- Z m
void left_mobius(Eigen::MatrixXd& m);       // m <- M m
void left_zeta_t(Eigen::MatrixXd& m);       // m <- Z^T m
void left_mobius_t(Eigen::MatrixXd& m);     // m <- M^T m

} // namespace lmlreg
