// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sparse three-level grid container and its .mvox serialization.
//
// .mvox layout, all little-endian:
//   "MVOX1"            5 bytes magic
//   u16 version        currently 1
//   u32 res1, res2, res3, level, k, samples_per_element
//   f64 delta, domain min xyz, domain max xyz
//   u64 voxel count    n
//   u32 record size    2 * k * 10 + 20
//   mask               ceil(res1^3 / 8) bytes, bit b = block b (x fastest)
//   index              n x u32 ascending linear voxel ids
//   records            n x record size
//   u32 crc32          over mask, index and records
// A record holds, for the tangent then the normal channel, k lobes of
// 6 compact SGGX bytes + f32 weight (zero weight = unused slot), then
// f32 axis densities (yz, xz, xy), f32 occupancy and u32 material id.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvx/grid.hpp"
#include "mvx/sggx.hpp"

namespace mvx {

enum Channel : int { kTangent = 0, kNormal = 1 };
inline constexpr int kChannels = 2;

struct Lobe {
    CompactSggx sggx{};
    float weight = 0;
    bool operator==(const Lobe&) const = default;
};

struct VoxelPayload {
    std::array<std::vector<Lobe>, kChannels> channels;
    /// Projected coverage seen along x, y and z (onto the YZ, XZ, XY planes).
    std::array<float, 3> axis_density{};
    float occupancy = 0;
    uint32_t material_id = 0;

    bool operator==(const VoxelPayload&) const = default;
};

struct VolumeHeader {
    GridConfig grid;
    uint32_t level = 0;
    uint32_t k = 3;
    Aabb domain{{0, 0, 0}, {1, 1, 1}};

    uint32_t resolution() const { return grid.res1 * grid.res2; }
    double voxel_size() const { return domain.extent().x / resolution(); }
    uint32_t record_size() const { return kChannels * k * 10 + 20; }
    bool operator==(const VolumeHeader&) const = default;
};

class SparseVolume {
public:
    SparseVolume() : SparseVolume(VolumeHeader{}) {}
    explicit SparseVolume(const VolumeHeader& header);

    const VolumeHeader& header() const { return header_; }
    uint32_t resolution() const { return header_.resolution(); }

    /// Inserts or replaces. Lobe counts must not exceed k. Single writer.
    void set_voxel(const Int3& index, const VoxelPayload& payload);
    /// Empty optional for unoccupied voxels; OutOfBounds outside the grid.
    std::optional<VoxelPayload> get_voxel(const Int3& index) const;
    /// Record slot of an occupied voxel, for repeated lookups.
    std::optional<uint32_t> find_slot(uint32_t linear) const;
    VoxelPayload payload(uint32_t slot) const;
    uint32_t slot_index(uint32_t slot) const { return keys_[slot]; }

    bool block_occupied(const Int3& block) const;
    const std::vector<uint8_t>& block_mask() const { return mask_; }

    size_t occupied_count() const { return keys_.size(); }
    /// Slots in ascending linear index order.
    std::vector<uint32_t> ordered_slots() const;
    /// Bytes held by payload records and their index.
    size_t payload_bytes() const { return records_.size() + keys_.size() * sizeof(uint32_t); }

    /// Canonical byte stream; equal volumes serialize identically.
    std::vector<uint8_t> serialize() const;
    static SparseVolume deserialize(std::span<const uint8_t> bytes);

    void write_file(const std::string& path) const;
    static SparseVolume read_file(const std::string& path);

    /// Human-readable per-voxel listing.
    void dump(std::ostream& os) const;

    bool operator==(const SparseVolume& other) const { return serialize() == other.serialize(); }

private:
    void pack(uint32_t slot, const VoxelPayload& payload);
    void rehash(size_t capacity);
    void check_bounds(const Int3& index) const;

    VolumeHeader header_;
    std::vector<uint8_t> mask_;
    std::vector<uint32_t> keys_;      // slot -> linear index
    std::vector<uint8_t> records_;    // slot-major records
    std::vector<uint32_t> table_;     // open addressing, slot + 1 (0 = empty)
    bool ascending_ = true;
};

}  // namespace mvx
