#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfqkd/optics.hpp"

namespace tfqkd::protocol {

enum class Port : std::uint8_t { kConstructive = 0, kDestructive = 1 };
enum class Role : std::uint8_t { kAlice, kBob };

/// The two random bits a party encodes per frame: bit 1 goes into time bin 2,
/// bit 2 into time bin 3. Bin 1 stays unmodulated as the phase reference.
struct EncodingBits {
  std::uint8_t bit1 = 0;
  std::uint8_t bit2 = 0;
};

/// Charlie's public announcement for a conclusive frame: which key bin
/// (2 or 3) clicked, and on which port.
struct Announcement {
  std::uint64_t frame_index = 0;
  int bin = 2;  ///< in {2, 3}
  Port port = Port::kConstructive;
};

enum class Relation : std::uint8_t { kEqual, kXorOne };

/// One sifted event together with both parties' derived key bits. bob_bit is
/// stored after the destructive-port flip, so alice_bit == bob_bit in the
/// error-free case.
struct SiftedRecord {
  Announcement announcement;
  std::uint8_t alice_bit = 0;
  std::uint8_t bob_bit = 0;
  Relation concluded_relation = Relation::kEqual;
  bool corrected = false;        ///< port interpretation inverted by flip correction
  bool window_no_data = false;   ///< window had no reference counts; decision inherited
};

/// A conclusive detection before key-bit derivation: the announced (bin, port)
/// plus both parties' local encodings, as needed for QBER accounting.
struct RawSiftedEvent {
  std::uint64_t frame_index = 0;
  int bin = 2;
  Port port = Port::kConstructive;
  EncodingBits alice;
  EncodingBits bob;
};

/// Accepted bin-1 (reference) counts aggregated over one flip-correction
/// window of consecutive frames.
struct ReferenceWindow {
  std::uint64_t c1_constructive = 0;
  std::uint64_t c1_destructive = 0;
};

/// A detector click reduced to its assigned (bin, port).
struct BinPortClick {
  int bin = 1;  ///< in {1, 2, 3}
  Port port = Port::kConstructive;
};

/// Build the three-bin frame for one party: phases (0, bit1*pi, bit2*pi),
/// equal mean photon number per bin.
optics::ThreeBinFrame encode_frame(const EncodingBits& bits, double mu_per_bin,
                                   std::uint64_t frame_index);

/// Table-style sifting: conclusive when exactly one distinct (bin, port) with
/// bin in {2, 3} clicked. Bin-1 clicks are monitoring-only and never
/// invalidate a frame.
std::optional<Announcement> conclusive_outcome(
    const std::vector<BinPortClick>& clicks, std::uint64_t frame_index);

/// Key bit for one party given the announcement. Alice keeps the encoded bit
/// of the announced bin; Bob keeps his for constructive announcements and
/// flips it for destructive ones.
std::uint8_t derive_key_bit(const Announcement& ann,
                            const EncodingBits& local_bits, Role role);

Relation announced_relation(const Announcement& ann);

/// Reference (bin-1) visibility, (C1 - D1) / (C1 + D1).
/// Empty window -> nullopt (no data).
std::optional<double> reference_visibility(std::uint64_t c1_constructive,
                                           std::uint64_t c1_destructive);

/// Per-window pi-misalignment correction. Windows whose reference visibility
/// falls below `threshold` have every event's port interpretation inverted
/// before key-bit derivation. Windows without reference data inherit the
/// previous window's decision and are flagged. Event window index is
/// frame_index / window_frames.
std::vector<SiftedRecord> flip_correction(
    const std::vector<RawSiftedEvent>& events,
    const std::vector<ReferenceWindow>& windows, std::uint64_t window_frames,
    double threshold);

/// Raw-count variant of the flip decision: a window is treated as misaligned
/// when its constructive reference count falls below `min_constructive`.
/// Same inheritance rule for empty windows (no clicks on either port).
std::vector<SiftedRecord> flip_correction_raw(
    const std::vector<RawSiftedEvent>& events,
    const std::vector<ReferenceWindow>& windows, std::uint64_t window_frames,
    std::uint64_t min_constructive);

/// Derivation with no correction applied (ports taken at face value).
std::vector<SiftedRecord> derive_records(
    const std::vector<RawSiftedEvent>& events);

/// Line format: "frame_index bin port alice_bit bob_bit corrected_flag".
std::string record_header();
std::string to_line(const SiftedRecord& r);

}  // namespace tfqkd::protocol
