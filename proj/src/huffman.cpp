#include "lvp/huffman.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace lvp {

namespace {

struct BuildNode {
    int64_t count;
    int32_t min_sym; // smallest symbol in the subtree, for tie-breaking
    int left = -1;   // indices into the node pool; -1 marks a leaf
    int right = -1;
    int32_t sym = 0; // valid for leaves
};

// (count, min_sym) ascending; among equals, leaves first.
bool node_less(const BuildNode& a, const BuildNode& b, bool a_leaf, bool b_leaf) {
    if (a.count != b.count) return a.count < b.count;
    if (a.min_sym != b.min_sym) return a.min_sym < b.min_sym;
    return a_leaf && !b_leaf;
}

} // namespace

HuffmanTable huffman_build(const std::map<int32_t, int64_t>& histogram) {
    require(!histogram.empty(), ErrorKind::Codec, "huffman: empty histogram");
    for (const auto& [sym, count] : histogram)
        require(count > 0, ErrorKind::Codec, "huffman: non-positive count");

    HuffmanTable table;
    if (histogram.size() == 1) {
        table.symbols = {histogram.begin()->first};
        table.code_lengths = {1};
        huffman_assign_codes(table);
        return table;
    }

    // Two-queue merge: leaves pre-sorted, merged nodes appear in
    // nondecreasing count order, so both queues stay sorted.
    std::vector<BuildNode> pool;
    std::deque<int> leaves, merged;
    for (const auto& [sym, count] : histogram) {
        pool.push_back({count, sym, -1, -1, sym});
        leaves.push_back(static_cast<int>(pool.size()) - 1);
    }
    std::sort(leaves.begin(), leaves.end(), [&](int a, int b) {
        return node_less(pool[a], pool[b], true, true);
    });

    auto take_min = [&]() {
        int idx;
        if (leaves.empty()) {
            idx = merged.front();
            merged.pop_front();
        } else if (merged.empty()) {
            idx = leaves.front();
            leaves.pop_front();
        } else if (node_less(pool[leaves.front()], pool[merged.front()], true, false)) {
            idx = leaves.front();
            leaves.pop_front();
        } else {
            idx = merged.front();
            merged.pop_front();
        }
        return idx;
    };

    while (leaves.size() + merged.size() > 1) {
        int a = take_min();
        int b = take_min();
        BuildNode parent;
        parent.count = pool[a].count + pool[b].count;
        parent.min_sym = std::min(pool[a].min_sym, pool[b].min_sym);
        parent.left = a;
        parent.right = b;
        pool.push_back(parent);
        merged.push_back(static_cast<int>(pool.size()) - 1);
    }

    // Depths by explicit traversal.
    std::unordered_map<int32_t, uint8_t> depth;
    std::vector<std::pair<int, int>> stack{{merged.front(), 0}};
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        const BuildNode& n = pool[idx];
        if (n.left < 0) {
            require(d <= 63, ErrorKind::Codec, "huffman: code length exceeds 63 bits");
            depth[n.sym] = static_cast<uint8_t>(d);
        } else {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }

    for (const auto& [sym, count] : histogram) {
        table.symbols.push_back(sym);
        table.code_lengths.push_back(depth.at(sym));
    }
    huffman_assign_codes(table);
    return table;
}

void huffman_assign_codes(HuffmanTable& table) {
    require(table.symbols.size() == table.code_lengths.size() && !table.symbols.empty(),
            ErrorKind::CorruptStream, "huffman table: malformed");
    require(std::is_sorted(table.symbols.begin(), table.symbols.end()) &&
                std::adjacent_find(table.symbols.begin(), table.symbols.end()) ==
                    table.symbols.end(),
            ErrorKind::CorruptStream, "huffman table: symbols must be sorted and distinct");

    // Kraft sum in 1/2^63 units; prefix codes require <= 1.
    uint64_t kraft = 0;
    uint8_t max_len = 0;
    for (uint8_t len : table.code_lengths) {
        require(len >= 1 && len <= 63, ErrorKind::CorruptStream, "huffman table: bad code length");
        const uint64_t unit = uint64_t{1} << (63 - len);
        require(kraft <= (uint64_t{1} << 63) - unit, ErrorKind::CorruptStream,
                "huffman table: Kraft inequality violated");
        kraft += unit;
        max_len = std::max(max_len, len);
    }

    // Canonical order: (length, symbol) ascending.
    std::vector<size_t> order(table.symbols.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (table.code_lengths[a] != table.code_lengths[b])
            return table.code_lengths[a] < table.code_lengths[b];
        return table.symbols[a] < table.symbols[b];
    });

    table.codes.assign(table.symbols.size(), 0);
    uint64_t code = 0;
    uint8_t prev_len = 0;
    for (size_t k = 0; k < order.size(); ++k) {
        const size_t i = order[k];
        const uint8_t len = table.code_lengths[i];
        code <<= (len - prev_len);
        table.codes[i] = code;
        ++code;
        prev_len = len;
    }
    (void)max_len;
}

BitStream huffman_encode(const std::vector<int32_t>& values, const HuffmanTable& table) {
    BitWriter w;
    for (int32_t v : values) {
        auto it = std::lower_bound(table.symbols.begin(), table.symbols.end(), v);
        require(it != table.symbols.end() && *it == v, ErrorKind::Codec,
                "huffman encode: symbol " + std::to_string(v) + " not in table");
        const size_t i = static_cast<size_t>(it - table.symbols.begin());
        w.put_bits(table.codes[i], table.code_lengths[i]);
    }
    return w.finish();
}

std::vector<int32_t> huffman_decode(const BitStream& bits, const HuffmanTable& table,
                                    size_t count) {
    // Canonical decode: first code and symbol offset per length.
    uint8_t max_len = 0;
    for (uint8_t len : table.code_lengths) max_len = std::max(max_len, len);

    std::vector<uint32_t> len_count(max_len + 1, 0);
    for (uint8_t len : table.code_lengths) ++len_count[len];

    std::vector<size_t> order(table.symbols.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (table.code_lengths[a] != table.code_lengths[b])
            return table.code_lengths[a] < table.code_lengths[b];
        return table.symbols[a] < table.symbols[b];
    });

    std::vector<uint64_t> first_code(max_len + 2, 0);
    std::vector<size_t> first_index(max_len + 2, 0);
    uint64_t code = 0;
    size_t idx = 0;
    for (int len = 1; len <= max_len; ++len) {
        code <<= 1;
        first_code[len] = code;
        first_index[len] = idx;
        code += len_count[len];
        idx += len_count[len];
    }

    std::vector<int32_t> out;
    out.reserve(count);
    BitReader r(bits);
    for (size_t n = 0; n < count; ++n) {
        uint64_t acc = 0;
        int len = 0;
        for (;;) {
            acc = (acc << 1) | r.get_bit();
            ++len;
            require(len <= max_len, ErrorKind::CorruptStream, "huffman decode: invalid code");
            if (len_count[len] > 0 && acc - first_code[len] < len_count[len]) {
                out.push_back(table.symbols[order[first_index[len] + (acc - first_code[len])]]);
                break;
            }
        }
    }
    return out;
}

void huffman_serialize(const HuffmanTable& table, ByteWriter& w) {
    w.u32(static_cast<uint32_t>(table.size()));
    for (int32_t s : table.symbols) w.u32(static_cast<uint32_t>(s));
    for (uint8_t len : table.code_lengths) w.u8(len);
}

HuffmanTable huffman_deserialize(ByteReader& r) {
    HuffmanTable t;
    const uint32_t n = r.u32();
    require(n >= 1 && n <= (uint32_t{1} << 24), ErrorKind::CorruptStream,
            "huffman table: implausible symbol count");
    t.symbols.resize(n);
    t.code_lengths.resize(n);
    for (auto& s : t.symbols) s = static_cast<int32_t>(r.u32());
    for (auto& len : t.code_lengths) len = r.u8();
    huffman_assign_codes(t); // validates sortedness, Kraft, lengths
    return t;
}

} // namespace lvp
