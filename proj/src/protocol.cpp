#include "tfqkd/protocol.hpp"

#include <stdexcept>

namespace tfqkd::protocol {

optics::ThreeBinFrame encode_frame(const EncodingBits& bits, double mu_per_bin,
                                   std::uint64_t frame_index) {
  if (bits.bit1 > 1 || bits.bit2 > 1) {
    throw std::invalid_argument("encoding bits must be 0 or 1");
  }
  optics::ThreeBinFrame f;
  f.frame_index = frame_index;
  f.bins[0] = optics::CoherentBin(mu_per_bin, 0.0);
  f.bins[1] = optics::CoherentBin(mu_per_bin, bits.bit1 * optics::kPi);
  f.bins[2] = optics::CoherentBin(mu_per_bin, bits.bit2 * optics::kPi);
  return f;
}

std::optional<Announcement> conclusive_outcome(
    const std::vector<BinPortClick>& clicks, std::uint64_t frame_index) {
  bool seen[2][2] = {{false, false}, {false, false}};  // [bin-2][port]
  for (const auto& c : clicks) {
    if (c.bin == 2 || c.bin == 3) {
      seen[c.bin - 2][static_cast<int>(c.port)] = true;
    }
  }
  std::optional<Announcement> result;
  for (int b = 0; b < 2; ++b) {
    for (int p = 0; p < 2; ++p) {
      if (!seen[b][p]) continue;
      if (result) return std::nullopt;  // more than one key click
      result = Announcement{frame_index, b + 2, static_cast<Port>(p)};
    }
  }
  return result;
}

std::uint8_t derive_key_bit(const Announcement& ann,
                            const EncodingBits& local_bits, Role role) {
  if (ann.bin != 2 && ann.bin != 3) {
    throw std::invalid_argument("announcement bin must be 2 or 3");
  }
  const std::uint8_t bit = ann.bin == 2 ? local_bits.bit1 : local_bits.bit2;
  if (role == Role::kBob && ann.port == Port::kDestructive) {
    return bit ^ 1u;
  }
  return bit;
}

Relation announced_relation(const Announcement& ann) {
  return ann.port == Port::kConstructive ? Relation::kEqual : Relation::kXorOne;
}

std::optional<double> reference_visibility(std::uint64_t c1_constructive,
                                           std::uint64_t c1_destructive) {
  const std::uint64_t total = c1_constructive + c1_destructive;
  if (total == 0) return std::nullopt;
  return (static_cast<double>(c1_constructive) -
          static_cast<double>(c1_destructive)) /
         static_cast<double>(total);
}

namespace {

SiftedRecord make_record(const RawSiftedEvent& ev, bool invert_port,
                         bool no_data) {
  SiftedRecord r;
  r.announcement.frame_index = ev.frame_index;
  r.announcement.bin = ev.bin;
  r.announcement.port =
      invert_port ? (ev.port == Port::kConstructive ? Port::kDestructive
                                                    : Port::kConstructive)
                  : ev.port;
  r.alice_bit = derive_key_bit(r.announcement, ev.alice, Role::kAlice);
  r.bob_bit = derive_key_bit(r.announcement, ev.bob, Role::kBob);
  r.concluded_relation = announced_relation(r.announcement);
  r.corrected = invert_port;
  r.window_no_data = no_data;
  return r;
}

}  // namespace

std::vector<SiftedRecord> flip_correction(
    const std::vector<RawSiftedEvent>& events,
    const std::vector<ReferenceWindow>& windows, std::uint64_t window_frames,
    double threshold) {
  if (window_frames < 1) {
    throw std::invalid_argument("window_frames must be >= 1");
  }
  if (!(threshold > -1.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must be in (-1, 1)");
  }
  // Decide per window first; empty windows inherit the previous decision.
  std::vector<std::uint8_t> flip(windows.size(), 0);
  std::vector<std::uint8_t> no_data(windows.size(), 0);
  bool prev_flip = false;
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const auto vis =
        reference_visibility(windows[wi].c1_constructive,
                             windows[wi].c1_destructive);
    if (vis) {
      prev_flip = *vis < threshold;
    } else {
      no_data[wi] = 1;
    }
    flip[wi] = prev_flip ? 1 : 0;
  }

  std::vector<SiftedRecord> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    const std::uint64_t wi = ev.frame_index / window_frames;
    const bool invert = wi < flip.size() && flip[wi] != 0;
    const bool nd = wi < no_data.size() && no_data[wi] != 0;
    out.push_back(make_record(ev, invert, nd));
  }
  return out;
}

std::vector<SiftedRecord> flip_correction_raw(
    const std::vector<RawSiftedEvent>& events,
    const std::vector<ReferenceWindow>& windows, std::uint64_t window_frames,
    std::uint64_t min_constructive) {
  if (window_frames < 1) {
    throw std::invalid_argument("window_frames must be >= 1");
  }
  std::vector<std::uint8_t> flip(windows.size(), 0);
  std::vector<std::uint8_t> no_data(windows.size(), 0);
  bool prev_flip = false;
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    if (windows[wi].c1_constructive + windows[wi].c1_destructive == 0) {
      no_data[wi] = 1;
    } else {
      prev_flip = windows[wi].c1_constructive < min_constructive;
    }
    flip[wi] = prev_flip ? 1 : 0;
  }
  std::vector<SiftedRecord> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    const std::uint64_t wi = ev.frame_index / window_frames;
    out.push_back(make_record(ev, wi < flip.size() && flip[wi] != 0,
                              wi < no_data.size() && no_data[wi] != 0));
  }
  return out;
}

std::vector<SiftedRecord> derive_records(
    const std::vector<RawSiftedEvent>& events) {
  std::vector<SiftedRecord> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    out.push_back(make_record(ev, false, false));
  }
  return out;
}

std::string record_header() {
  return "frame_index bin port alice_bit bob_bit corrected_flag";
}

std::string to_line(const SiftedRecord& r) {
  std::string line = std::to_string(r.announcement.frame_index);
  line += ' ';
  line += std::to_string(r.announcement.bin);
  line += ' ';
  line += r.announcement.port == Port::kConstructive ? 'C' : 'D';
  line += ' ';
  line += static_cast<char>('0' + r.alice_bit);
  line += ' ';
  line += static_cast<char>('0' + r.bob_bit);
  line += ' ';
  line += r.corrected ? '1' : '0';
  return line;
}

}  // namespace tfqkd::protocol
