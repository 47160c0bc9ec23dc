#ifndef TACPLUS_CODEC_HUFFMAN_HPP
#define TACPLUS_CODEC_HUFFMAN_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "tacplus/codec/bitstream.hpp"
#include "tacplus/common.hpp"

namespace tacplus {

/// Canonical Huffman code over 32-bit symbols. Only code lengths are stored; the
/// codes themselves follow from sorting by (length, symbol).
class HuffmanTable {
public:
    static constexpr unsigned kMaxLength = 56;
    static constexpr unsigned kLutBits = 11;

    HuffmanTable() = default;

    /// (symbol, length) pairs; any order.
    explicit HuffmanTable(std::vector<std::pair<std::uint32_t, std::uint8_t>> lengths) {
        assign(std::move(lengths));
    }

    std::size_t size() const { return sorted_.size(); }
    bool empty() const { return sorted_.empty(); }

    /// Symbols with their code lengths, ascending by symbol.
    std::vector<std::pair<std::uint32_t, std::uint8_t>> lengths() const {
        std::vector<std::pair<std::uint32_t, std::uint8_t>> out;
        out.reserve(sorted_.size());
        for (std::size_t i = 0; i < sorted_.size(); ++i) out.emplace_back(sorted_[i], len_[i]);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::uint8_t length_of(std::uint32_t symbol) const { return entry(symbol).second; }

    void encode(BitWriter& w, std::uint32_t symbol) const {
        const auto [code, len] = entry(symbol);
        w.put(code, len);
    }

    std::uint32_t decode(BitReader& r) const {
        if (sorted_.empty()) throw CorruptStream("decode with empty Huffman table");
        const std::uint64_t window = r.peek(kLutBits);
        const auto& slot = lut_[window];
        if (slot.len != 0) {
            r.skip(slot.len);
            return slot.symbol;
        }
        // Longer codes: walk canonical ranges.
        const std::uint64_t wide = r.peek(max_len_);
        for (unsigned len = kLutBits + 1; len <= max_len_; ++len) {
            if (count_[len] == 0) continue;
            const std::uint64_t code = wide >> (max_len_ - len);
            if (code >= first_code_[len] && code - first_code_[len] < count_[len]) {
                r.skip(len);
                return sorted_[first_index_[len] + (code - first_code_[len])];
            }
        }
        throw CorruptStream("invalid Huffman code");
    }

    /// u32 symbol count, then per symbol u32 value and u8 length.
    void write(ByteWriter& w) const {
        const auto ls = lengths();
        w.u32(static_cast<std::uint32_t>(ls.size()));
        for (const auto& [s, l] : ls) {
            w.u32(s);
            w.u8(l);
        }
    }

    static HuffmanTable read(ByteReader& r) {
        const std::uint32_t n = r.u32();
        if (static_cast<std::size_t>(n) * 5 > r.remaining()) throw CorruptStream("Huffman table truncated");
        std::vector<std::pair<std::uint32_t, std::uint8_t>> ls;
        ls.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t s = r.u32();
            const std::uint8_t l = r.u8();
            ls.emplace_back(s, l);
        }
        try {
            return HuffmanTable(std::move(ls));
        } catch (const InvalidArgument& e) {
            throw CorruptStream(std::string("bad Huffman table: ") + e.what());
        }
    }

    bool operator==(const HuffmanTable& o) const { return lengths() == o.lengths(); }

private:
    struct LutSlot {
        std::uint32_t symbol = 0;
        std::uint8_t len = 0;
    };

    std::pair<std::uint64_t, std::uint8_t> entry(std::uint32_t symbol) const {
        auto it = codes_.find(symbol);
        if (it == codes_.end()) {
            throw std::logic_error("symbol " + std::to_string(symbol) + " not in Huffman table");
        }
        return it->second;
    }

    void assign(std::vector<std::pair<std::uint32_t, std::uint8_t>> lengths) {
        std::sort(lengths.begin(), lengths.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        max_len_ = 0;
        for (const auto& [s, l] : lengths) {
            if (l == 0 || l > kMaxLength) throw InvalidArgument("Huffman code length out of range");
            max_len_ = std::max<unsigned>(max_len_, l);
        }
        count_.assign(kMaxLength + 2, 0);
        first_code_.assign(kMaxLength + 2, 0);
        first_index_.assign(kMaxLength + 2, 0);
        sorted_.clear();
        len_.clear();
        codes_.clear();
        codes_.reserve(lengths.size());
        std::uint64_t code = 0;
        unsigned prev = lengths.empty() ? 0 : lengths.front().second;
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            const auto [sym, len] = lengths[i];
            code <<= (len - prev);
            prev = len;
            if (len < 64 && code >= (1ull << len)) throw InvalidArgument("code lengths violate Kraft inequality");
            if (count_[len] == 0) {
                first_code_[len] = code;
                first_index_[len] = sorted_.size();
            }
            ++count_[len];
            if (!codes_.emplace(sym, std::pair<std::uint64_t, std::uint8_t>{code, len}).second) {
                throw InvalidArgument("duplicate symbol in Huffman table");
            }
            sorted_.push_back(sym);
            len_.push_back(len);
            ++code;
        }
        lut_.assign(std::size_t{1} << kLutBits, LutSlot{});
        for (std::size_t i = 0; i < sorted_.size(); ++i) {
            const unsigned len = len_[i];
            if (len > kLutBits) continue;
            const std::uint64_t c = codes_.at(sorted_[i]).first;
            const std::uint64_t lo = c << (kLutBits - len);
            const std::uint64_t hi = (c + 1) << (kLutBits - len);
            for (std::uint64_t k = lo; k < hi; ++k) lut_[k] = {sorted_[i], static_cast<std::uint8_t>(len)};
        }
    }

    std::vector<std::uint32_t> sorted_;  // canonical order
    std::vector<std::uint8_t> len_;
    std::unordered_map<std::uint32_t, std::pair<std::uint64_t, std::uint8_t>> codes_;
    std::vector<std::uint64_t> count_, first_code_, first_index_;
    std::vector<LutSlot> lut_;
    unsigned max_len_ = 0;
};

/// Symbol frequencies, ordered by symbol so construction is deterministic.
using Histogram = std::vector<std::pair<std::uint32_t, std::uint64_t>>;

template <class Symbol>
Histogram make_histogram(std::span<const Symbol> symbols) {
    std::unordered_map<std::uint32_t, std::uint64_t> counts;
    for (auto s : symbols) ++counts[static_cast<std::uint32_t>(s)];
    Histogram h(counts.begin(), counts.end());
    std::sort(h.begin(), h.end());
    return h;
}

/// Standard Huffman construction, then canonical code assignment.
///
/// Ties between equal weights are broken by the smallest symbol contained in each
/// subtree, so the result depends only on the histogram. A one-symbol alphabet
/// gets a 1-bit code.
inline HuffmanTable build_huffman(const Histogram& histogram) {
    if (histogram.empty()) throw InvalidArgument("Huffman histogram is empty");
    if (histogram.size() == 1) return HuffmanTable({{histogram.front().first, 1}});

    struct Node {
        std::uint64_t weight;
        std::uint32_t min_symbol;
        int left, right;  // -1 for leaves
    };
    std::vector<Node> nodes;
    nodes.reserve(histogram.size() * 2);
    using Key = std::tuple<std::uint64_t, std::uint32_t, int>;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> pq;
    for (const auto& [sym, w] : histogram) {
        if (w == 0) continue;
        nodes.push_back({w, sym, -1, -1});
        pq.emplace(w, sym, static_cast<int>(nodes.size() - 1));
    }
    if (nodes.size() == 1) return HuffmanTable({{nodes.front().min_symbol, 1}});
    while (pq.size() > 1) {
        const auto [wa, sa, a] = pq.top();
        pq.pop();
        const auto [wb, sb, b] = pq.top();
        pq.pop();
        nodes.push_back({wa + wb, std::min(sa, sb), a, b});
        pq.emplace(wa + wb, std::min(sa, sb), static_cast<int>(nodes.size() - 1));
    }
    std::vector<std::pair<std::uint32_t, std::uint8_t>> lengths;
    std::vector<std::pair<int, unsigned>> stack{{std::get<2>(pq.top()), 0u}};
    while (!stack.empty()) {
        const auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& n = nodes[id];
        if (n.left < 0) {
            if (depth > HuffmanTable::kMaxLength) throw std::length_error("Huffman code too long");
            lengths.emplace_back(n.min_symbol, static_cast<std::uint8_t>(depth));
        } else {
            stack.emplace_back(n.left, depth + 1);
            stack.emplace_back(n.right, depth + 1);
        }
    }
    return HuffmanTable(std::move(lengths));
}

template <class Symbol>
void huffman_encode(const HuffmanTable& table, std::span<const Symbol> symbols, BitWriter& w) {
    for (auto s : symbols) table.encode(w, static_cast<std::uint32_t>(s));
}

template <class Symbol>
void huffman_decode(const HuffmanTable& table, BitReader& r, std::span<Symbol> out) {
    for (auto& s : out) s = static_cast<Symbol>(table.decode(r));
}

}  // namespace tacplus

#endif  // TACPLUS_CODEC_HUFFMAN_HPP
