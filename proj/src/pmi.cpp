#include "noisyor/pmi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "noisyor/parallel.hpp"
#include "noisyor/random.hpp"

namespace noisyor {

void validate_partition(const Partition& part) {
    if (part.n < 3) throw InvalidInput("partition: n must be at least 3");
    std::vector<int> all;
    all.reserve(static_cast<std::size_t>(part.n));
    for (int w = 0; w < 3; ++w) {
        const auto& block = part.block(w);
        if (block.empty()) throw InvalidInput("partition: empty block");
        if (!std::is_sorted(block.begin(), block.end())) throw InvalidInput("partition: blocks must be sorted");
        all.insert(all.end(), block.begin(), block.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<int> expected(static_cast<std::size_t>(part.n));
    std::iota(expected.begin(), expected.end(), 0);
    if (all != expected) throw InvalidInput("partition: blocks must be disjoint and cover [0, n)");
    const auto [lo, hi] = std::minmax({part.a.size(), part.b.size(), part.c.size()});
    if (hi - lo > 1) throw InvalidInput("partition: block sizes differ by more than one");
}

Partition random_partition(int n, std::uint64_t seed) {
    if (n < 3) throw InvalidInput("random_partition: n must be at least 3");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_engine(seed, Stream::partition);
    std::shuffle(perm.begin(), perm.end(), rng);
    Partition part;
    part.n = n;
    part.seed = seed;
    const auto cut1 = static_cast<std::ptrdiff_t>(n / 3 + (n % 3 > 0 ? 1 : 0));
    const auto cut2 = cut1 + static_cast<std::ptrdiff_t>(n / 3 + (n % 3 > 1 ? 1 : 0));
    part.a.assign(perm.begin(), perm.begin() + cut1);
    part.b.assign(perm.begin() + cut1, perm.begin() + cut2);
    part.c.assign(perm.begin() + cut2, perm.end());
    for (auto* block : {&part.a, &part.b, &part.c}) std::sort(block->begin(), block->end());
    return part;
}

namespace {

/// Per-symptom bit columns of z = 1 - s over the samples.
class ZeroColumns {
public:
    ZeroColumns(const SampleBatch& batch) : words_((batch.size() + 63) / 64), n_(batch.n()) {
        bits_.assign(static_cast<std::size_t>(n_ * words_), 0);
        // Present symptoms are sparse: transpose the set bits of s, then invert.
        for (std::int64_t r = 0; r < batch.size(); ++r) {
            const auto row = batch.row(r);
            const std::uint64_t rbit = std::uint64_t{1} << (r % 64);
            for (std::size_t w = 0; w < row.size(); ++w) {
                std::uint64_t word = row[w];
                while (word) {
                    const int i = static_cast<int>(w * 64) + std::countr_zero(word);
                    word &= word - 1;
                    if (i < n_) bits_[static_cast<std::size_t>(i * words_ + r / 64)] |= rbit;
                }
            }
        }
        const int tail = static_cast<int>(batch.size() % 64);
        const std::uint64_t tail_mask = tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
        for (int i = 0; i < n_; ++i) {
            std::uint64_t* col = column(i);
            for (std::int64_t w = 0; w < words_; ++w) col[w] = ~col[w];
            col[words_ - 1] &= tail_mask;
        }
    }

    const std::uint64_t* column(int i) const { return bits_.data() + static_cast<std::size_t>(i) * words_; }
    std::uint64_t* column(int i) { return bits_.data() + static_cast<std::size_t>(i) * words_; }
    std::int64_t words() const { return words_; }

private:
    std::int64_t words_;
    int n_;
    std::vector<std::uint64_t> bits_;
};

std::int64_t popcount_and(const std::uint64_t* x, const std::uint64_t* y, std::int64_t words) {
    std::int64_t total = 0;
    for (std::int64_t w = 0; w < words; ++w) total += std::popcount(x[w] & y[w]);
    return total;
}

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

CountMatrix pair_counts(const ZeroColumns& z, const std::vector<int>& rows, const std::vector<int>& cols) {
    CountMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    parallel_chunks(static_cast<std::int64_t>(rows.size()), [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                out(r, static_cast<Eigen::Index>(c)) =
                    popcount_and(z.column(rows[static_cast<std::size_t>(r)]), z.column(cols[c]), z.words());
    });
    return out;
}

constexpr std::int64_t kTileWords = 1024;

}  // namespace

ZeroCounts count_zero_patterns(const SampleBatch& batch, const Partition& part) {
    validate_partition(part);
    if (batch.n() != part.n) {
        std::ostringstream os;
        os << "count_zero_patterns: batch has n = " << batch.n() << " but partition has n = " << part.n;
        throw InvalidInput(os.str());
    }
    const ZeroColumns z(batch);
    ZeroCounts out;
    out.part = part;
    out.N = batch.size();
    out.singles.resize(static_cast<std::size_t>(part.n));
    for (int i = 0; i < part.n; ++i)
        out.singles[static_cast<std::size_t>(i)] = popcount_and(z.column(i), z.column(i), z.words());
    out.pairs_ab = pair_counts(z, part.a, part.b);
    out.pairs_bc = pair_counts(z, part.b, part.c);
    out.pairs_ca = pair_counts(z, part.c, part.a);

    const std::size_t na = part.a.size(), nb = part.b.size(), nc = part.c.size();
    out.triples_abc.assign(na * nb * nc, 0);
    // Tiles over the sample words keep the working set of all columns in cache.
    parallel_chunks(static_cast<std::int64_t>(na), [&](std::int64_t begin, std::int64_t end) {
        std::vector<std::uint64_t> both(static_cast<std::size_t>(kTileWords));
        for (std::int64_t w0 = 0; w0 < z.words(); w0 += kTileWords) {
            const std::int64_t len = std::min(kTileWords, z.words() - w0);
            for (std::int64_t ia = begin; ia < end; ++ia) {
                const std::uint64_t* col_i = z.column(part.a[static_cast<std::size_t>(ia)]) + w0;
                for (std::size_t ib = 0; ib < nb; ++ib) {
                    const std::uint64_t* col_j = z.column(part.b[ib]) + w0;
                    for (std::int64_t w = 0; w < len; ++w) both[static_cast<std::size_t>(w)] = col_i[w] & col_j[w];
                    std::int64_t* dest = out.triples_abc.data() + (static_cast<std::size_t>(ia) * nb + ib) * nc;
                    for (std::size_t ic = 0; ic < nc; ++ic)
                        dest[ic] += popcount_and(both.data(), z.column(part.c[ic]) + w0, len);
                }
            }
        }
    });
    return out;
}

namespace {

[[noreturn]] void insufficient(std::vector<int> indices) {
    std::ostringstream os;
    os << "pmi_from_counts: zero co-absence count for symptoms {";
    for (std::size_t i = 0; i < indices.size(); ++i) os << (i ? ", " : "") << indices[i];
    os << "}; increase N";
    throw InsufficientData(os.str(), std::move(indices));
}

}  // namespace

PmiBlocks pmi_from_counts(const ZeroCounts& counts) {
    const Partition& part = counts.part;
    validate_partition(part);
    if (counts.N <= 0) throw InvalidInput("pmi_from_counts: N must be positive");
    const double log_n = std::log(static_cast<double>(counts.N));

    std::vector<double> log_single(static_cast<std::size_t>(part.n));
    for (int i = 0; i < part.n; ++i) {
        const auto c = counts.singles[static_cast<std::size_t>(i)];
        if (c <= 0) insufficient({i});
        log_single[static_cast<std::size_t>(i)] = std::log(static_cast<double>(c)) - log_n;
    }
    auto log_pairs = [&](const CountMatrix& c, const std::vector<int>& rows, const std::vector<int>& cols) {
        DenseMatrix out(c.rows(), c.cols());
        for (Eigen::Index r = 0; r < c.rows(); ++r)
            for (Eigen::Index k = 0; k < c.cols(); ++k) {
                if (c(r, k) <= 0) insufficient({rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(k)]});
                out(r, k) = std::log(static_cast<double>(c(r, k))) - log_n;
            }
        return out;
    };
    const DenseMatrix lab = log_pairs(counts.pairs_ab, part.a, part.b);
    const DenseMatrix lbc = log_pairs(counts.pairs_bc, part.b, part.c);
    const DenseMatrix lca = log_pairs(counts.pairs_ca, part.c, part.a);

    PmiBlocks out;
    out.part = part;
    out.source = PmiSource::empirical;
    auto pmi = [&](const DenseMatrix& joint, const std::vector<int>& rows, const std::vector<int>& cols) {
        DenseMatrix m = joint;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index k = 0; k < m.cols(); ++k)
                m(r, k) -= log_single[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])] +
                           log_single[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
        return m;
    };
    out.pmi_ab = pmi(lab, part.a, part.b);
    out.pmi_bc = pmi(lbc, part.b, part.c);
    out.pmi_ca = pmi(lca, part.c, part.a);

    const auto na = static_cast<Eigen::Index>(part.a.size());
    const auto nb = static_cast<Eigen::Index>(part.b.size());
    const auto nc = static_cast<Eigen::Index>(part.c.size());
    out.pmit = DenseTensor3(na, nb, nc);
    for (Eigen::Index ia = 0; ia < na; ++ia)
        for (Eigen::Index ib = 0; ib < nb; ++ib)
            for (Eigen::Index ic = 0; ic < nc; ++ic) {
                const int i = part.a[static_cast<std::size_t>(ia)];
                const int j = part.b[static_cast<std::size_t>(ib)];
                const int k = part.c[static_cast<std::size_t>(ic)];
                const auto t = counts.triple(ia, ib, ic);
                if (t <= 0) insufficient({i, j, k});
                const double log_triple = std::log(static_cast<double>(t)) - log_n;
                out.pmit(ia, ib, ic) = lab(ia, ib) + lbc(ib, ic) + lca(ic, ia) - log_triple -
                                       log_single[static_cast<std::size_t>(i)] -
                                       log_single[static_cast<std::size_t>(j)] -
                                       log_single[static_cast<std::size_t>(k)];
            }
    return out;
}

}  // namespace noisyor
