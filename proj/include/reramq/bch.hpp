// Binary BCH codes of length 127 over GF(2^7) with systematic encoding and
// bounded-distance hard-decision decoding (Berlekamp-Massey plus Chien
// search). Decoding returns the corrected codeword or nothing when the error
// pattern is beyond the design distance.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "reramq/quantizer.hpp"

namespace reramq {

/// GF(2^7) built on the primitive polynomial x^7 + x^3 + 1.
class Gf128 {
  public:
    static constexpr int kOrder = 127;

    Gf128() {
        int value = 1;
        for (int i = 0; i < kOrder; ++i) {
            exp_[i] = static_cast<std::uint8_t>(value);
            log_[value] = i;
            value <<= 1;
            if (value & 0x80) value ^= 0x89;
        }
        if (value != 1) throw std::logic_error("Gf128: generator element is not primitive");
        for (int i = kOrder; i < 2 * kOrder; ++i) exp_[i] = exp_[i - kOrder];
    }

    std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    std::uint8_t inv(std::uint8_t a) const {
        if (a == 0) throw std::invalid_argument("Gf128: zero has no inverse");
        return exp_[kOrder - log_[a]];
    }

    std::uint8_t pow_alpha(int e) const {
        e %= kOrder;
        if (e < 0) e += kOrder;
        return exp_[e];
    }

    int log(std::uint8_t a) const {
        if (a == 0) throw std::invalid_argument("Gf128: log of zero");
        return log_[a];
    }

  private:
    std::array<std::uint8_t, 2 * kOrder> exp_{};
    std::array<int, 128> log_{};
};

/// A binary BCH code of length 127 correcting up to t errors. Codewords are
/// bit vectors indexed by polynomial degree; the message occupies the high
/// degrees, the parity the low ones.
class BchCode {
  public:
    static BchCode bch_127_113() { return BchCode(2); }
    static BchCode bch_127_92() { return BchCode(5); }

    int n() const { return kOrder; }
    int k() const { return kOrder - static_cast<int>(generator_.size()) + 1; }
    int t() const { return t_; }

    /// Generator polynomial coefficients, constant term first.
    const std::vector<std::uint8_t>& generator() const { return generator_; }

    /// Systematic encoding: parity in positions [0, n-k), message in [n-k, n).
    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> message) const {
        if (static_cast<int>(message.size()) != k()) throw std::invalid_argument("BchCode: message length mismatch");
        const int parity_len = n() - k();
        std::vector<std::uint8_t> codeword(static_cast<std::size_t>(n()), 0);
        for (int i = 0; i < k(); ++i) codeword[static_cast<std::size_t>(parity_len + i)] = message[i] ? 1 : 0;

        std::vector<std::uint8_t> remainder(static_cast<std::size_t>(parity_len), 0);
        for (int i = n() - 1; i >= parity_len; --i) {
            const std::uint8_t feedback = codeword[static_cast<std::size_t>(i)] ^ remainder[remainder.size() - 1];
            for (int j = parity_len - 1; j > 0; --j)
                remainder[static_cast<std::size_t>(j)] =
                    remainder[static_cast<std::size_t>(j - 1)] ^ (feedback ? generator_[static_cast<std::size_t>(j)] : 0);
            remainder[0] = feedback ? generator_[0] : 0;
        }
        for (int j = 0; j < parity_len; ++j) codeword[static_cast<std::size_t>(j)] = remainder[static_cast<std::size_t>(j)];
        return codeword;
    }

    /// Message bits of a codeword (the high-degree systematic positions).
    std::vector<std::uint8_t> message_of(std::span<const std::uint8_t> codeword) const {
        if (static_cast<int>(codeword.size()) != n()) throw std::invalid_argument("BchCode: codeword length mismatch");
        return std::vector<std::uint8_t>(codeword.begin() + (n() - k()), codeword.end());
    }

    /// Bounded-distance decoding. Returns the corrected codeword, or nothing
    /// when no codeword lies within t flips of the input.
    std::optional<std::vector<std::uint8_t>> decode(std::span<const std::uint8_t> word) const {
        if (static_cast<int>(word.size()) != n()) throw std::invalid_argument("BchCode: word length mismatch");

        std::vector<std::uint8_t> syndromes(static_cast<std::size_t>(2 * t_), 0);
        bool clean = true;
        for (int i = 1; i <= 2 * t_; ++i) {
            std::uint8_t s = 0;
            for (int j = 0; j < n(); ++j)
                if (word[static_cast<std::size_t>(j)]) s ^= field_.pow_alpha(i * j);
            syndromes[static_cast<std::size_t>(i - 1)] = s;
            if (s != 0) clean = false;
        }
        std::vector<std::uint8_t> result(word.begin(), word.end());
        if (clean) return result;

        // Berlekamp-Massey for the error locator polynomial
        std::vector<std::uint8_t> sigma{1}, prev{1};
        int length = 0, shift = 1;
        std::uint8_t prev_discrepancy = 1;
        for (int step = 0; step < 2 * t_; ++step) {
            std::uint8_t d = syndromes[static_cast<std::size_t>(step)];
            for (int i = 1; i <= length && i < static_cast<int>(sigma.size()); ++i)
                d ^= field_.mul(sigma[static_cast<std::size_t>(i)], syndromes[static_cast<std::size_t>(step - i)]);
            if (d == 0) {
                ++shift;
            } else if (2 * length <= step) {
                const std::vector<std::uint8_t> saved = sigma;
                const std::uint8_t factor = field_.mul(d, field_.inv(prev_discrepancy));
                if (static_cast<int>(sigma.size()) < static_cast<int>(prev.size()) + shift)
                    sigma.resize(prev.size() + static_cast<std::size_t>(shift), 0);
                for (std::size_t i = 0; i < prev.size(); ++i)
                    sigma[i + static_cast<std::size_t>(shift)] ^= field_.mul(factor, prev[i]);
                length = step + 1 - length;
                prev = saved;
                prev_discrepancy = d;
                shift = 1;
            } else {
                const std::uint8_t factor = field_.mul(d, field_.inv(prev_discrepancy));
                if (static_cast<int>(sigma.size()) < static_cast<int>(prev.size()) + shift)
                    sigma.resize(prev.size() + static_cast<std::size_t>(shift), 0);
                for (std::size_t i = 0; i < prev.size(); ++i)
                    sigma[i + static_cast<std::size_t>(shift)] ^= field_.mul(factor, prev[i]);
                ++shift;
            }
        }
        while (!sigma.empty() && sigma.back() == 0) sigma.pop_back();
        const int degree = static_cast<int>(sigma.size()) - 1;
        if (length > t_ || degree != length) return std::nullopt;

        // Chien search over all positions
        int found = 0;
        for (int j = 0; j < n(); ++j) {
            std::uint8_t value = 0;
            for (std::size_t i = 0; i < sigma.size(); ++i)
                if (sigma[i]) value ^= field_.mul(sigma[i], field_.pow_alpha(-j * static_cast<int>(i)));
            if (value == 0) {
                result[static_cast<std::size_t>(j)] ^= 1;
                ++found;
            }
        }
        if (found != degree) return std::nullopt;

        // the corrected word must be a codeword; reject the rare inconsistent fit
        for (int i = 1; i <= 2 * t_; ++i) {
            std::uint8_t s = 0;
            for (int j = 0; j < n(); ++j)
                if (result[static_cast<std::size_t>(j)]) s ^= field_.pow_alpha(i * j);
            if (s != 0) return std::nullopt;
        }
        return result;
    }

  private:
    static constexpr int kOrder = 127;

    explicit BchCode(int t) : t_(t) {
        std::vector<bool> used(kOrder, false);
        std::vector<std::uint8_t> gen{1};
        for (int root = 1; root <= 2 * t_; ++root) {
            if (used[static_cast<std::size_t>(root)]) continue;
            // cyclotomic coset of the root exponent
            std::vector<int> coset;
            int e = root;
            do {
                coset.push_back(e);
                used[static_cast<std::size_t>(e)] = true;
                e = (2 * e) % kOrder;
            } while (e != root);

            // minimal polynomial: product of (x - alpha^e) over the coset
            std::vector<std::uint8_t> minimal{1};
            for (int exponent : coset) {
                std::vector<std::uint8_t> next(minimal.size() + 1, 0);
                const std::uint8_t r = field_.pow_alpha(exponent);
                for (std::size_t i = 0; i < minimal.size(); ++i) {
                    next[i + 1] ^= minimal[i];
                    next[i] ^= field_.mul(minimal[i], r);
                }
                minimal = std::move(next);
            }
            for (std::uint8_t c : minimal)
                if (c > 1) throw std::logic_error("BchCode: minimal polynomial not binary");

            std::vector<std::uint8_t> product(gen.size() + minimal.size() - 1, 0);
            for (std::size_t i = 0; i < gen.size(); ++i)
                for (std::size_t j = 0; j < minimal.size(); ++j) product[i + j] ^= gen[i] & minimal[j];
            gen = std::move(product);
        }
        generator_ = std::move(gen);
    }

    Gf128 field_;
    int t_;
    std::vector<std::uint8_t> generator_;
};

/// Log-likelihood ratio of a quantized symbol: positive favors a stored 0.
/// Vanishing symbol probabilities are floored to keep the ratio finite.
inline double llr_from_symbol(const QuantizedChannel& qc, int symbol) {
    if (symbol < 0 || symbol >= qc.levels()) throw std::invalid_argument("llr_from_symbol: symbol out of range");
    constexpr double kFloor = 1e-30;
    return std::log(std::max(qc.prob0[static_cast<std::size_t>(symbol)], kFloor)) -
           std::log(std::max(qc.prob1[static_cast<std::size_t>(symbol)], kFloor));
}

} // namespace reramq
