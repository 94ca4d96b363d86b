// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/volume.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>

#include "mvx/error.hpp"
#include "mvx/sequence.hpp"

static_assert(std::endian::native == std::endian::little, "record packing assumes a little-endian host");

namespace mvx {
namespace {

constexpr char kMagic[5] = {'M', 'V', 'O', 'X', '1'};
constexpr uint16_t kVersion = 1;
constexpr size_t kHeaderBytes = 5 + 2 + 6 * 4 + 7 * 8 + 8 + 4;

template <class T>
void put(std::vector<uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        T v;
        std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
        return v;
    }

    std::span<const uint8_t> take(size_t n) {
        if (n > bytes_.size() - pos_) throw Error(ErrorCode::TruncatedStream, "stream ends early");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const uint8_t> bytes_;
    size_t pos_ = 0;
};

uint32_t hash_key(uint32_t key) { return uint32_t(splitmix64(key)); }

size_t mask_bytes(uint32_t res1) { return (size_t(res1) * res1 * res1 + 7) / 8; }

uint32_t block_of(uint32_t linear, const VolumeHeader& h) {
    const Int3 v = unlinear_index(linear, h.resolution());
    const int r2 = int(h.grid.res2);
    return linear_index({v.x / r2, v.y / r2, v.z / r2}, h.grid.res1);
}

uint32_t crc(std::span<const uint8_t> bytes) {
    uLong c = crc32(0L, Z_NULL, 0);
    size_t done = 0;
    while (done < bytes.size()) {
        const uInt chunk = uInt(std::min<size_t>(bytes.size() - done, 1u << 30));
        c = crc32(c, bytes.data() + done, chunk);
        done += chunk;
    }
    return uint32_t(c);
}

}  // namespace

SparseVolume::SparseVolume(const VolumeHeader& header) : header_(header) {
    header_.grid.validate();
    if (header_.k < 1 || header_.k > 64) throw Error(ErrorCode::InvalidConfig, "k must be in [1, 64]");
    const Vec3 e = header_.domain.extent();
    if (!(e.x > 0) || !(e.y > 0) || !(e.z > 0)) throw Error(ErrorCode::DegenerateBounds, "volume domain is empty");
    mask_.assign(mask_bytes(header_.grid.res1), 0);
}

void SparseVolume::check_bounds(const Int3& i) const {
    const int r = int(resolution());
    if (i.x < 0 || i.y < 0 || i.z < 0 || i.x >= r || i.y >= r || i.z >= r)
        throw Error(ErrorCode::OutOfBounds, "voxel (" + std::to_string(i.x) + ", " + std::to_string(i.y) + ", " +
                                                std::to_string(i.z) + ") outside grid of " + std::to_string(r));
}

bool SparseVolume::block_occupied(const Int3& b) const {
    const int r = int(header_.grid.res1);
    if (b.x < 0 || b.y < 0 || b.z < 0 || b.x >= r || b.y >= r || b.z >= r)
        throw Error(ErrorCode::OutOfBounds, "block outside grid");
    const uint32_t bit = linear_index(b, header_.grid.res1);
    return (mask_[bit >> 3] >> (bit & 7)) & 1;
}

std::optional<uint32_t> SparseVolume::find_slot(uint32_t linear) const {
    if (table_.empty()) return std::nullopt;
    const uint32_t m = uint32_t(table_.size() - 1);
    for (uint32_t h = hash_key(linear) & m;; h = (h + 1) & m) {
        const uint32_t e = table_[h];
        if (e == 0) return std::nullopt;
        if (keys_[e - 1] == linear) return e - 1;
    }
}

void SparseVolume::rehash(size_t capacity) {
    table_.assign(capacity, 0);
    const uint32_t m = uint32_t(capacity - 1);
    for (uint32_t s = 0; s < keys_.size(); ++s) {
        uint32_t h = hash_key(keys_[s]) & m;
        while (table_[h] != 0) h = (h + 1) & m;
        table_[h] = s + 1;
    }
}

void SparseVolume::pack(uint32_t slot, const VoxelPayload& p) {
    uint8_t* rec = records_.data() + size_t(slot) * header_.record_size();
    std::memset(rec, 0, header_.record_size());
    for (int c = 0; c < kChannels; ++c) {
        for (size_t j = 0; j < p.channels[c].size(); ++j) {
            std::memcpy(rec, p.channels[c][j].sggx.data(), 6);
            std::memcpy(rec + 6, &p.channels[c][j].weight, 4);
            rec += 10;
        }
        rec += 10 * (header_.k - p.channels[c].size());
    }
    std::memcpy(rec, p.axis_density.data(), 12);
    std::memcpy(rec + 12, &p.occupancy, 4);
    std::memcpy(rec + 16, &p.material_id, 4);
}

VoxelPayload SparseVolume::payload(uint32_t slot) const {
    VoxelPayload p;
    const uint8_t* rec = records_.data() + size_t(slot) * header_.record_size();
    for (int c = 0; c < kChannels; ++c) {
        for (uint32_t j = 0; j < header_.k; ++j, rec += 10) {
            Lobe l;
            std::memcpy(l.sggx.data(), rec, 6);
            std::memcpy(&l.weight, rec + 6, 4);
            if (l.weight != 0) p.channels[c].push_back(l);
        }
    }
    std::memcpy(p.axis_density.data(), rec, 12);
    std::memcpy(&p.occupancy, rec + 12, 4);
    std::memcpy(&p.material_id, rec + 16, 4);
    return p;
}

void SparseVolume::set_voxel(const Int3& index, const VoxelPayload& payload) {
    check_bounds(index);
    for (const auto& ch : payload.channels) {
        if (ch.size() > header_.k) throw Error(ErrorCode::CapacityExceeded, "more lobes than the volume's k");
        for (const Lobe& l : ch)
            if (!(l.weight > 0) || !std::isfinite(l.weight))
                throw Error(ErrorCode::InvalidParams, "lobe weights must be positive and finite");
    }
    const uint32_t linear = linear_index(index, resolution());
    if (auto s = find_slot(linear)) {
        pack(*s, payload);
        return;
    }
    if (!keys_.empty() && linear < keys_.back()) ascending_ = false;
    const uint32_t slot = uint32_t(keys_.size());
    keys_.push_back(linear);
    records_.resize(records_.size() + header_.record_size());
    pack(slot, payload);
    if (keys_.size() * 2 > table_.size()) {
        rehash(std::max<size_t>(16, std::bit_ceil(keys_.size() * 2)));
    } else {
        const uint32_t m = uint32_t(table_.size() - 1);
        uint32_t h = hash_key(linear) & m;
        while (table_[h] != 0) h = (h + 1) & m;
        table_[h] = slot + 1;
    }
    const uint32_t bit = block_of(linear, header_);
    mask_[bit >> 3] |= uint8_t(1u << (bit & 7));
}

std::optional<VoxelPayload> SparseVolume::get_voxel(const Int3& index) const {
    check_bounds(index);
    const uint32_t r2 = header_.grid.res2;
    if (!block_occupied({index.x / int(r2), index.y / int(r2), index.z / int(r2)})) return std::nullopt;
    if (auto s = find_slot(linear_index(index, resolution()))) return payload(*s);
    return std::nullopt;
}

std::vector<uint32_t> SparseVolume::ordered_slots() const {
    std::vector<uint32_t> slots(keys_.size());
    for (uint32_t i = 0; i < slots.size(); ++i) slots[i] = i;
    if (!ascending_) std::sort(slots.begin(), slots.end(), [&](uint32_t a, uint32_t b) { return keys_[a] < keys_[b]; });
    return slots;
}

std::vector<uint8_t> SparseVolume::serialize() const {
    std::vector<uint8_t> out;
    const size_t rs = header_.record_size();
    out.reserve(kHeaderBytes + mask_.size() + keys_.size() * (4 + rs) + 4);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put(out, kVersion);
    const GridConfig& g = header_.grid;
    for (uint32_t v : {g.res1, g.res2, g.res3, header_.level, header_.k, g.samples_per_element}) put(out, v);
    for (double v : {g.delta, header_.domain.min.x, header_.domain.min.y, header_.domain.min.z, header_.domain.max.x,
                     header_.domain.max.y, header_.domain.max.z})
        put(out, v);
    put(out, uint64_t(keys_.size()));
    put(out, uint32_t(rs));
    const size_t body = out.size();
    out.insert(out.end(), mask_.begin(), mask_.end());
    const auto slots = ordered_slots();
    for (uint32_t s : slots) put(out, keys_[s]);
    for (uint32_t s : slots) {
        const uint8_t* rec = records_.data() + size_t(s) * rs;
        out.insert(out.end(), rec, rec + rs);
    }
    put(out, crc(std::span(out).subspan(body)));
    return out;
}

SparseVolume SparseVolume::deserialize(std::span<const uint8_t> bytes) {
    Reader in(bytes);
    if (bytes.size() < sizeof(kMagic)) throw Error(ErrorCode::TruncatedStream, "stream shorter than magic");
    if (std::memcmp(in.take(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorCode::BadMagic, "not an MVOX1 stream");
    const auto version = in.get<uint16_t>();
    if (version != kVersion)
        throw Error(ErrorCode::VersionMismatch, "version " + std::to_string(version) + ", expected " +
                                                    std::to_string(kVersion));
    VolumeHeader h;
    h.grid.res1 = in.get<uint32_t>();
    h.grid.res2 = in.get<uint32_t>();
    h.grid.res3 = in.get<uint32_t>();
    h.level = in.get<uint32_t>();
    h.k = in.get<uint32_t>();
    h.grid.samples_per_element = in.get<uint32_t>();
    h.grid.delta = in.get<double>();
    h.domain.min = {in.get<double>(), in.get<double>(), in.get<double>()};
    h.domain.max = {in.get<double>(), in.get<double>(), in.get<double>()};
    const auto count = in.get<uint64_t>();
    const auto rs = in.get<uint32_t>();

    SparseVolume v = [&] {
        try {
            return SparseVolume(h);
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptStream, std::string("bad header: ") + e.what());
        }
    }();
    if (rs != h.record_size()) throw Error(ErrorCode::CorruptStream, "record size does not match k");
    const uint64_t cells = uint64_t(v.resolution()) * v.resolution() * v.resolution();
    if (count > cells) throw Error(ErrorCode::CorruptStream, "voxel count exceeds grid");
    const size_t body = in.pos();
    const uint64_t need = v.mask_.size() + count * (4 + uint64_t(rs)) + 4;
    if (need > in.remaining()) throw Error(ErrorCode::TruncatedStream, "stream ends early");
    if (need < in.remaining()) throw Error(ErrorCode::CorruptStream, "trailing bytes after checksum");

    const auto mask = in.take(v.mask_.size());
    const auto index = in.take(count * 4);
    const auto records = in.take(count * rs);
    const auto stored = in.get<uint32_t>();
    if (crc(bytes.subspan(body, bytes.size() - body - 4)) != stored)
        throw Error(ErrorCode::ChecksumMismatch, "payload checksum differs");

    v.keys_.resize(count);
    std::memcpy(v.keys_.data(), index.data(), index.size());
    v.records_.assign(records.begin(), records.end());
    std::vector<uint8_t> derived(v.mask_.size(), 0);
    for (size_t i = 0; i < count; ++i) {
        if (v.keys_[i] >= cells || (i > 0 && v.keys_[i] <= v.keys_[i - 1]))
            throw Error(ErrorCode::CorruptStream, "voxel index not strictly ascending or out of range");
        const uint32_t bit = block_of(v.keys_[i], h);
        derived[bit >> 3] |= uint8_t(1u << (bit & 7));
    }
    if (!std::equal(derived.begin(), derived.end(), mask.begin()))
        throw Error(ErrorCode::CorruptStream, "block mask disagrees with voxel index");
    v.mask_ = std::move(derived);
    for (uint32_t s = 0; s < count; ++s) {
        const VoxelPayload p = v.payload(s);
        for (const auto& ch : p.channels)
            for (const Lobe& l : ch)
                if (!(l.weight > 0) || !std::isfinite(l.weight))
                    throw Error(ErrorCode::CorruptStream, "invalid lobe weight");
    }
    v.rehash(std::max<size_t>(16, std::bit_ceil(size_t(count) * 2)));
    return v;
}

void SparseVolume::write_file(const std::string& path) const {
    const auto bytes = serialize();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

SparseVolume SparseVolume::read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

void SparseVolume::dump(std::ostream& os) const {
    const auto& g = header_.grid;
    os << "# mvox level " << header_.level << " res " << resolution() << " (" << g.res1 << "x" << g.res2 << "x"
       << g.res3 << ") k " << header_.k << " voxels " << occupied_count() << "\n";
    os << "# domain " << header_.domain.min.x << " " << header_.domain.min.y << " " << header_.domain.min.z << " .. "
       << header_.domain.max.x << " " << header_.domain.max.y << " " << header_.domain.max.z << "\n";
    os << "# x y z occupancy d_yz d_xz d_xy material | tangent lobes | normal lobes"
          " (sigma_x sigma_y sigma_z r_xy r_xz r_yz @ weight)\n";
    const auto flags = os.flags();
    os << std::setprecision(6);
    for (uint32_t s : ordered_slots()) {
        const Int3 i = unlinear_index(keys_[s], resolution());
        const VoxelPayload p = payload(s);
        os << i.x << " " << i.y << " " << i.z << " " << p.occupancy << " " << p.axis_density[0] << " "
           << p.axis_density[1] << " " << p.axis_density[2] << " " << p.material_id;
        for (const auto& ch : p.channels) {
            os << " |";
            for (const Lobe& l : ch) {
                const SggxParams q = decode_compact(l.sggx);
                os << " " << q.sigma_x << " " << q.sigma_y << " " << q.sigma_z << " " << q.r_xy << " " << q.r_xz << " "
                   << q.r_yz << " @ " << l.weight;
            }
        }
        os << "\n";
    }
    os.flags(flags);
}

}  // namespace mvx
