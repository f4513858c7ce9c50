#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pqpan/energy_model.hpp"
#include "pqpan/kem_engine.hpp"
#include "pqpan/link_model.hpp"
#include "pqpan/reference_data.hpp"

namespace pqpan {

enum class Role { Peripheral, Central };

/// Peripheral: Idle -> KeyGenDone -> PkSent -> CtReceived -> Established.
/// Central:    Idle -> PkReceived -> CtSent -> Established.
enum class Phase { Idle, KeyGenDone, PkSent, PkReceived, CtSent, CtReceived, Established, Failed };

std::string_view to_string(Role role);
std::string_view to_string(Phase phase);

/// The fixed phase sequence of a role, from Idle to Established.
const std::vector<Phase>& phase_order(Role role);

struct PartyState {
  Role role = Role::Peripheral;
  Phase phase = Phase::Idle;
  KemParamSet scheme;
  std::optional<KemKeyPair> keypair;  // peripheral
  Bytes peer_public_key;              // central
  std::optional<SessionKey> session_key;
  /// Every phase entered, starting with Idle.
  std::vector<Phase> history{Phase::Idle};
};

struct TraceRecord {
  double time_s = 0.0;  // start of the frame on the virtual timeline
  LinkFrame frame;
  TransferOp op = TransferOp::NotifyPk;
};

struct FrameTrace {
  std::vector<TraceRecord> records;

  std::size_t data_frame_count(std::optional<TransferOp> op = std::nullopt) const;
  std::size_t ack_count(std::optional<TransferOp> op = std::nullopt) const;

  /// One JSON object per line: time_us, dir, payload_B, overhead_B, op, is_ack.
  std::string to_jsonl() const;
};

/// Raw energy charged to each party while the simulation ran, in microjoules,
/// plus the peripheral's calibrated key-establishment breakdown.
struct EnergyLedger {
  EnergyComponents peripheral_raw;
  EnergyComponents central_raw;
  double peripheral_payload_uj = 0.0;
  double central_payload_uj = 0.0;
  EnergyBreakdown peripheral;

  /// Calibrated keygen + decap + Notify_PK + Write_CT of the peripheral.
  double pqke_total_uj() const { return peripheral.e_total; }

  std::string to_json() const;
};

struct HandshakeResult {
  PartyState peripheral;
  PartyState central;
  FrameTrace trace;
  EnergyLedger ledger;
  double end_time_s = 0.0;
};

struct SimulationInputs {
  KemParamSet scheme;
  LinkConfig link;
  RadioProfile profile;
  CalibrationFactors gamma;
  std::uint64_t seed = 0;
};

/// Runs the three-step key establishment between an in-memory peripheral and
/// central over a lossless, in-order link. The peripheral generates the key
/// pair and notifies pk; the central encapsulates and writes ct; the
/// peripheral decapsulates. Both derive the session key from the shared
/// secret. Throws HandshakeFailure when reassembly disagrees with the
/// scheme's artifact sizes or the phase order is violated.
HandshakeResult run_handshake(const SimulationInputs& inputs, const CycleTable& cycles,
                              const KemBackend& backend);

struct PayloadTransfer {
  FrameTrace delta;
  double energy_uj = 0.0;  // peripheral (sender) side, uncalibrated
};

/// Notifies an AEAD-expanded payload from the peripheral to the central and
/// appends the frames to `session.trace`. Throws NotEstablished unless both
/// parties finished the handshake.
PayloadTransfer send_secured_payload(HandshakeResult& session,
                                     std::span<const std::uint8_t> payload,
                                     const LinkConfig& link, const RadioProfile& profile);

}  // namespace pqpan
