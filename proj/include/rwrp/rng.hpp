#pragma once
#include <cstdint>
#include <cmath>

namespace rwrp {

// Counter-based stream: output i depends only on (master_seed, stream_id, i),
// so any sample index can be replayed without generating its predecessors and
// parallel consumers can derive disjoint streams deterministically.
struct RngStream {
    uint64_t master_seed = 0;
    uint64_t stream_id = 0;
    uint64_t counter = 0;

    RngStream() = default;
    RngStream(uint64_t seed, uint64_t stream) : master_seed(seed), stream_id(stream) {}

    // derive a child stream; child counter starts at 0
    RngStream derive(uint64_t sub_id) const;

    // stateless access: value of slot i in this stream
    uint64_t at(uint64_t i) const;

    uint64_t next_u64() { return at(counter++); }

    // uniform on (0,1), strictly inside the interval
    double next_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // exponential with mean 1
    double next_exponential() { return -std::log(next_double()); }

    // index into cumulative weights [c_0, ..., c_{k-1}], c_{k-1} == total
    int next_index(const double* cum, int k, double total) {
        double u = next_double() * total;
        for (int i = 0; i < k - 1; ++i)
            if (u < cum[i]) return i;
        return k - 1;
    }
};

// SplitMix64 finalizer; also used for hashing lattice sites into environments.
uint64_t mix64(uint64_t x);

} // namespace rwrp
