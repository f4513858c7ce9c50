#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pqpan {

inline constexpr std::size_t kAttHeaderBytes = 3;
inline constexpr std::size_t kL2capHeaderBytes = 4;
inline constexpr std::size_t kLlOverheadBytes = 10;

inline constexpr int kMinAttMtu = 23;
inline constexpr int kMinLlPdu = 27;
inline constexpr int kMaxLlPdu = 251;

/// Direction of a link-layer frame. The central is the connection initiator.
enum class Direction { CentralToPeripheral, PeripheralToCentral };

std::string_view to_string(Direction dir);
Direction reverse(Direction dir);

struct LinkConfig {
  int att_mtu = kMinAttMtu;
  int ll_pdu = kMinLlPdu;
  double phy_rate_bps = 1e6;
  double ifs_s = 150e-6;
  double conn_interval_s = 50e-3;  // informational; not used by the model
  /// IFS gaps charged per data/ack exchange (1 or 2).
  int ifs_slots = 2;

  /// Throws InvalidConfig unless att_mtu >= 23, 27 <= ll_pdu <= 251, the PHY
  /// rate is positive, IFS is non-negative and ifs_slots is 1 or 2.
  void validate() const;

  std::size_t att_value_capacity() const {
    return static_cast<std::size_t>(att_mtu) - kAttHeaderBytes;
  }

  /// The eight (ATT MTU, LL PDU) settings of the published measurement grid.
  static std::vector<LinkConfig> measurement_grid();
};

struct LinkFrame {
  Direction direction = Direction::PeripheralToCentral;
  std::size_t payload_bytes = 0;
  std::size_t overhead_bytes = kLlOverheadBytes;
  bool is_ack = false;

  std::size_t on_air_bytes() const { return payload_bytes + overhead_bytes; }

  friend bool operator==(const LinkFrame&, const LinkFrame&) = default;
};

/// Frame sequence for one artifact transfer: every data frame is immediately
/// followed by its empty acknowledgement in the reverse direction.
struct FragmentationPlan {
  std::vector<LinkFrame> frames;
  /// ATT value bytes carried by each ATT PDU, in transmission order.
  std::vector<std::size_t> att_value_sizes;
  std::size_t att_pdu_count = 0;
  std::size_t ll_data_pdu_count = 0;

  std::size_t ack_count() const;
};

struct FrameCounts {
  std::size_t att_pdus = 0;
  std::size_t ll_data_pdus = 0;
  friend bool operator==(const FrameCounts&, const FrameCounts&) = default;
};

/// Closed-form frame counts; equals what plan_transfer builds.
FrameCounts count_frames(std::size_t artifact_size, const LinkConfig& cfg);

/// Greedy fragmentation: each ATT PDU carries min(att_mtu - 3, remaining)
/// value bytes, gains 3 B ATT and 4 B L2CAP headers, and the resulting SDU is
/// cut into maximal LL data frames of at most ll_pdu bytes.
FragmentationPlan plan_transfer(
    std::size_t artifact_size, const LinkConfig& cfg,
    Direction data_direction = Direction::PeripheralToCentral);

/// Radio-on time seen by the sender of the data frames.
struct TimeBudget {
  double t_tx_s = 0.0;   // transmitting data frames
  double t_rx_s = 0.0;   // receiving acknowledgements
  double t_ifs_s = 0.0;  // cumulative inter-frame spacing

  double total() const { return t_tx_s + t_rx_s + t_ifs_s; }
};

double frame_airtime_s(const LinkFrame& frame, const LinkConfig& cfg);

TimeBudget airtime(const FragmentationPlan& plan, const LinkConfig& cfg);

struct OnAirBytes {
  std::size_t tx = 0;
  std::size_t rx = 0;
  friend bool operator==(const OnAirBytes&, const OnAirBytes&) = default;
};

OnAirBytes bytes_on_air(const FragmentationPlan& plan);

/// Ordered frame list as a JSON document.
std::string plan_to_json(const FragmentationPlan& plan, const LinkConfig& cfg);

}  // namespace pqpan
