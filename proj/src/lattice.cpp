#include "lmlreg/lattice.hpp"

#include "lmlreg/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

namespace lmlreg {

namespace {

std::size_t checked_length(std::size_t n) {
    if (n == 0 || !std::has_single_bit(n)) {
        throw ShapeError("transform length " + std::to_string(n) + " is not a power of two");
    }
    return n;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void check_square_power(const Eigen::MatrixXd& m, bool by_cols) {
    checked_length(static_cast<std::size_t>(by_cols ? m.cols() : m.rows()));
}

} // namespace

int Subset::cardinality() const noexcept { return popcount(mask_); }

std::vector<Mask> Subset::subsets() const {
    std::vector<Mask> out;
    // Enumerate submasks descending, then reverse for increasing order.
    Mask s = mask_;
    while (true) {
        out.push_back(s);
        if (s == 0) break;
        s = (s - 1) & mask_;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<Mask> Subset::supersets() const {
    std::vector<Mask> out;
    const Mask full = lattice_->full();
    const Mask rest = full & ~mask_;
    Subset free_part(*lattice_, rest);
    for (Mask extra : free_part.subsets()) out.push_back(mask_ | extra);
    std::sort(out.begin(), out.end());
    return out;
}

std::string Subset::str() const { return lattice_->format(mask_); }

SubsetLattice::SubsetLattice(std::vector<std::string> labels) : labels_(std::move(labels)) {
    const int n = static_cast<int>(labels_.size());
    if (n < 1 || n > kMaxGroundSize) {
        throw RangeError("ground set size " + std::to_string(n) + " outside [1, " +
                         std::to_string(kMaxGroundSize) + "]");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].empty()) throw ArgumentError("empty element label");
        for (std::size_t j = 0; j < i; ++j) {
            if (labels_[i] == labels_[j]) throw ArgumentError("duplicate element label '" + labels_[i] + "'");
        }
    }
}

namespace {
std::vector<std::string> numeric_labels(int n) {
    if (n < 1 || n > SubsetLattice::kMaxGroundSize) {
        throw RangeError("ground set size " + std::to_string(n) + " outside [1, " +
                         std::to_string(SubsetLattice::kMaxGroundSize) + "]");
    }
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
    return out;
}
} // namespace

SubsetLattice::SubsetLattice(int ground_size) : SubsetLattice(numeric_labels(ground_size)) {}

Subset SubsetLattice::subset(Mask mask) const {
    if (mask >= size()) {
        throw RangeError("mask " + std::to_string(mask) + " out of range for ground set of size " +
                         std::to_string(ground_size()));
    }
    return Subset(*this, mask);
}

std::string SubsetLattice::format(Mask mask) const {
    std::string out = "{";
    bool first = true;
    for (int i = 0; i < ground_size(); ++i) {
        if ((mask >> i) & 1u) {
            if (!first) out += ",";
            out += labels_[i];
            first = false;
        }
    }
    return out + "}";
}

Mask SubsetLattice::parse(const std::string& text) const {
    std::string t = trim(text);
    if (t == "\xE2\x88\x85") return 0; // U+2205 empty set
    if (t.size() < 2 || t.front() != '{' || t.back() != '}') {
        throw ArgumentError("subset '" + text + "' is not in brace notation");
    }
    std::string body = trim(t.substr(1, t.size() - 2));
    if (body.empty()) return 0;
    Mask mask = 0;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        std::string item = trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        auto it = std::find(labels_.begin(), labels_.end(), item);
        if (it == labels_.end()) throw ArgumentError("unknown element '" + item + "' in subset '" + text + "'");
        const Mask bit = Mask{1} << (it - labels_.begin());
        if (mask & bit) throw ArgumentError("repeated element '" + item + "' in subset '" + text + "'");
        mask |= bit;
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return mask;
}

std::vector<Mask> SubsetLattice::graded_order() const {
    std::vector<Mask> out(size());
    for (Mask m = 0; m < size(); ++m) out[m] = m;
    std::stable_sort(out.begin(), out.end(), [](Mask a, Mask b) { return popcount(a) < popcount(b); });
    return out;
}

LatticeMatrix SubsetLattice::zeta_matrix() const {
    if (ground_size() > kMaxDenseGroundSize) {
        throw RangeError("dense lattice matrices are limited to ground sets of size " +
                         std::to_string(kMaxDenseGroundSize));
    }
    const auto n = static_cast<Eigen::Index>(size());
    LatticeMatrix z = LatticeMatrix::Zero(n, n);
    for (Mask e = 0; e < size(); ++e) {
        for (Mask h = 0; h < size(); ++h) {
            if ((e & ~h) == 0) z(e, h) = 1.0;
        }
    }
    return z;
}

LatticeMatrix SubsetLattice::mobius_matrix() const {
    if (ground_size() > kMaxDenseGroundSize) {
        throw RangeError("dense lattice matrices are limited to ground sets of size " +
                         std::to_string(kMaxDenseGroundSize));
    }
    const auto n = static_cast<Eigen::Index>(size());
    LatticeMatrix m = LatticeMatrix::Zero(n, n);
    for (Mask e = 0; e < size(); ++e) {
        for (Mask h = 0; h < size(); ++h) {
            if ((e & ~h) == 0) m(e, h) = (popcount(h & ~e) % 2 == 0) ? 1.0 : -1.0;
        }
    }
    return m;
}

void zeta_transform(std::span<double> x) {
    const std::size_t n = checked_length(x.size());
    for (std::size_t bit = 1; bit < n; bit <<= 1) {
        for (std::size_t m = 0; m < n; ++m) {
            if (m & bit) x[m] += x[m ^ bit];
        }
    }
}

void mobius_transform(std::span<double> x) {
    const std::size_t n = checked_length(x.size());
    for (std::size_t bit = 1; bit < n; bit <<= 1) {
        for (std::size_t m = 0; m < n; ++m) {
            if (m & bit) x[m] -= x[m ^ bit];
        }
    }
}

void superset_zeta_transform(std::span<double> x) {
    const std::size_t n = checked_length(x.size());
    for (std::size_t bit = 1; bit < n; bit <<= 1) {
        for (std::size_t m = 0; m < n; ++m) {
            if (!(m & bit)) x[m] += x[m | bit];
        }
    }
}

void superset_mobius_transform(std::span<double> x) {
    const std::size_t n = checked_length(x.size());
    for (std::size_t bit = 1; bit < n; bit <<= 1) {
        for (std::size_t m = 0; m < n; ++m) {
            if (!(m & bit)) x[m] -= x[m | bit];
        }
    }
}

std::vector<double> zeta_transform_cols(std::vector<double> x) {
    zeta_transform(x);
    return x;
}

std::vector<double> mobius_transform_cols(std::vector<double> x) {
    mobius_transform(x);
    return x;
}

void right_zeta(Eigen::MatrixXd& m) {
    check_square_power(m, true);
    const Eigen::Index n = m.cols();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index c = 0; c < n; ++c)
            if (c & bit) m.col(c) += m.col(c ^ bit);
}

void right_mobius(Eigen::MatrixXd& m) {
    check_square_power(m, true);
    const Eigen::Index n = m.cols();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index c = 0; c < n; ++c)
            if (c & bit) m.col(c) -= m.col(c ^ bit);
}

void right_zeta_t(Eigen::MatrixXd& m) {
    check_square_power(m, true);
    const Eigen::Index n = m.cols();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index c = 0; c < n; ++c)
            if (!(c & bit)) m.col(c) += m.col(c | bit);
}

void left_zeta(Eigen::MatrixXd& m) {
    check_square_power(m, false);
    const Eigen::Index n = m.rows();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index r = 0; r < n; ++r)
            if (!(r & bit)) m.row(r) += m.row(r | bit);
}

void left_mobius(Eigen::MatrixXd& m) {
    check_square_power(m, false);
    const Eigen::Index n = m.rows();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index r = 0; r < n; ++r)
            if (!(r & bit)) m.row(r) -= m.row(r | bit);
}

void left_zeta_t(Eigen::MatrixXd& m) {
    check_square_power(m, false);
    const Eigen::Index n = m.rows();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index r = 0; r < n; ++r)
            if (r & bit) m.row(r) += m.row(r ^ bit);
}

void left_mobius_t(Eigen::MatrixXd& m) {
    check_square_power(m, false);
    const Eigen::Index n = m.rows();
    for (Eigen::Index bit = 1; bit < n; bit <<= 1)
        for (Eigen::Index r = 0; r < n; ++r)
            if (r & bit) m.row(r) -= m.row(r ^ bit);
}

} // namespace lmlreg
