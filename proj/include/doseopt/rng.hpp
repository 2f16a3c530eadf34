#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace doseopt {

// Philox4x32-10 (Salmon et al., SC'11). Stateless block function.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Independent stream for one (seed, scenario, replication) triple. The block
// counter walks through the replication's private counter space, so draws
// never depend on which worker runs the replication.
class ReplicationStream {
public:
    ReplicationStream(std::uint64_t seed, std::uint64_t scenario, std::uint64_t replication);

    std::uint32_t next_u32();
    // Uniform on (0,1), never exactly 0 or 1.
    double uniform();
    // Four uniforms from one fresh block.
    std::array<double, 4> uniform4();

private:
    void refill();

    PhiloxKey key_{};
    std::uint64_t replication_ = 0;
    std::uint64_t block_ = 0;
    PhiloxCounter buf_{};
    int pos_ = 4;
};

} // namespace doseopt
