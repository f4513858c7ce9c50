#include "pqpan/protocol_sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <sstream>

#include "pqpan/errors.hpp"

namespace pqpan {

namespace {

constexpr std::uint16_t kAttCid = 0x0004;
constexpr std::uint16_t kPqkeHandle = 0x0012;
constexpr std::uint8_t kAttHandleValueNotify = 0x1B;
constexpr std::uint8_t kAttWriteCommand = 0x52;

std::uint8_t att_opcode(TransferOp op) {
  return op == TransferOp::WriteCt ? kAttWriteCommand : kAttHandleValueNotify;
}

void put_le16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_le16(const Bytes& in, std::size_t at) {
  return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

/// One link-layer data or ack frame in flight.
struct Wire {
  LinkFrame frame;
  Bytes payload;
  TransferOp op = TransferOp::NotifyPk;
};

/// Cuts an artifact into LL payloads: ATT PDUs sized by plan_transfer, each
/// wrapped as L2CAP length | CID | ATT opcode | handle | value.
std::deque<Bytes> encode_artifact(std::span<const std::uint8_t> artifact, TransferOp op,
                                  const LinkConfig& cfg) {
  const FragmentationPlan plan = plan_transfer(artifact.size(), cfg);
  const std::size_t ll = static_cast<std::size_t>(cfg.ll_pdu);
  std::deque<Bytes> frames;
  std::size_t offset = 0;
  for (std::size_t value : plan.att_value_sizes) {
    Bytes sdu;
    put_le16(sdu, static_cast<std::uint16_t>(kAttHeaderBytes + value));
    put_le16(sdu, kAttCid);
    sdu.push_back(att_opcode(op));
    put_le16(sdu, kPqkeHandle);
    sdu.insert(sdu.end(), artifact.begin() + static_cast<std::ptrdiff_t>(offset),
               artifact.begin() + static_cast<std::ptrdiff_t>(offset + value));
    offset += value;
    for (std::size_t p = 0; p < sdu.size(); p += ll) {
      const std::size_t end = std::min(p + ll, sdu.size());
      frames.emplace_back(sdu.begin() + static_cast<std::ptrdiff_t>(p),
                          sdu.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return frames;
}

/// Rebuilds an artifact of known size from LL payloads. The buffer is bounded
/// by the expected size; anything beyond it is a hard failure.
class Reassembler {
 public:
  Reassembler() = default;
  Reassembler(std::size_t expected, TransferOp op) : expected_(expected), op_(op) {
    artifact_.reserve(expected);
  }

  bool active() const { return expected_ > 0; }
  TransferOp op() const { return op_; }

  /// True once the final value byte has arrived.
  bool push(const Bytes& ll_payload) {
    if (!active() || complete()) {
      throw HandshakeFailure("unexpected data frame: no transfer in progress");
    }
    sdu_.insert(sdu_.end(), ll_payload.begin(), ll_payload.end());
    if (sdu_len_ == 0 && sdu_.size() >= kL2capHeaderBytes) {
      sdu_len_ = kL2capHeaderBytes + get_le16(sdu_, 0);
      if (get_le16(sdu_, 2) != kAttCid) throw HandshakeFailure("L2CAP frame not on ATT channel");
    }
    if (sdu_len_ != 0 && sdu_.size() > sdu_len_) {
      throw HandshakeFailure("L2CAP SDU longer than its length field");
    }
    if (sdu_len_ != 0 && sdu_.size() == sdu_len_) {
      const std::size_t header = kL2capHeaderBytes + kAttHeaderBytes;
      if (sdu_len_ < header || sdu_[kL2capHeaderBytes] != att_opcode(op_)) {
        throw HandshakeFailure("unexpected ATT PDU for " + std::string(to_string(op_)));
      }
      const std::size_t value = sdu_len_ - header;
      if (artifact_.size() + value > expected_) {
        throw HandshakeFailure(std::string(to_string(op_)) + " reassembly overflows " +
                               std::to_string(expected_) + " bytes");
      }
      artifact_.insert(artifact_.end(), sdu_.begin() + static_cast<std::ptrdiff_t>(header),
                       sdu_.end());
      sdu_.clear();
      sdu_len_ = 0;
    }
    return complete();
  }

  bool complete() const { return active() && sdu_.empty() && artifact_.size() == expected_; }

  Bytes take() {
    Bytes out = std::move(artifact_);
    *this = Reassembler();
    return out;
  }

 private:
  std::size_t expected_ = 0;
  TransferOp op_ = TransferOp::NotifyPk;
  Bytes sdu_;
  std::size_t sdu_len_ = 0;
  Bytes artifact_;
};

/// Link-layer side of one party: stop-and-wait transmit queue, owed acks and
/// a reassembler for the inbound artifact.
class Endpoint {
 public:
  enum class Event { None, TransferAcked, ArtifactComplete };

  explicit Endpoint(Direction outbound) : outbound_(outbound) {}

  void queue(std::deque<Bytes> frames, TransferOp op) {
    if (!tx_.empty() || awaiting_ack_) throw HandshakeFailure("transmit queue busy");
    tx_ = std::move(frames);
    tx_op_ = op;
  }

  void expect(std::size_t size, TransferOp op) { rx_ = Reassembler(size, op); }

  bool expecting(TransferOp op) const { return rx_.active() && rx_.op() == op; }

  /// Owed acks go first; a data frame only when the previous one was acked.
  std::optional<Wire> poll() {
    if (acks_owed_ > 0) {
      --acks_owed_;
      return Wire{{outbound_, 0, kLlOverheadBytes, true}, {}, ack_op_};
    }
    if (!awaiting_ack_ && !tx_.empty()) {
      Bytes payload = std::move(tx_.front());
      tx_.pop_front();
      awaiting_ack_ = true;
      return Wire{{outbound_, payload.size(), kLlOverheadBytes, false}, std::move(payload), tx_op_};
    }
    return std::nullopt;
  }

  Event receive(const Wire& w) {
    if (w.frame.is_ack) {
      if (!awaiting_ack_) throw HandshakeFailure("ack without outstanding data frame");
      awaiting_ack_ = false;
      return tx_.empty() ? Event::TransferAcked : Event::None;
    }
    if (!rx_.active() || rx_.op() != w.op) {
      throw HandshakeFailure("unexpected " + std::string(to_string(w.op)) + " data frame");
    }
    ++acks_owed_;
    ack_op_ = w.op;
    return rx_.push(w.payload) ? Event::ArtifactComplete : Event::None;
  }

  Bytes take_artifact() { return rx_.take(); }
  TransferOp tx_op() const { return tx_op_; }

 private:
  Direction outbound_;
  std::deque<Bytes> tx_;
  TransferOp tx_op_ = TransferOp::NotifyPk;
  bool awaiting_ack_ = false;
  std::size_t acks_owed_ = 0;
  TransferOp ack_op_ = TransferOp::NotifyPk;
  Reassembler rx_;
};

double& term(EnergyLedger& ledger, Role who, TransferOp op) {
  EnergyComponents& c = who == Role::Peripheral ? ledger.peripheral_raw : ledger.central_raw;
  switch (op) {
    case TransferOp::NotifyPk: return c.notify_pk;
    case TransferOp::WriteCt: return c.write_ct;
    case TransferOp::Payload: break;
  }
  return who == Role::Peripheral ? ledger.peripheral_payload_uj : ledger.central_payload_uj;
}

Role other(Role r) { return r == Role::Peripheral ? Role::Central : Role::Peripheral; }

/// Places frames on the virtual timeline and charges radio energy to both
/// ends: the transmitter at I_tx, the listener at I_rx, and every completed
/// data/ack exchange ifs_slots IFS gaps at I_ifs to both.
class Medium {
 public:
  Medium(const LinkConfig& link, const RadioProfile& profile, FrameTrace& trace,
         EnergyLedger& ledger, double& clock)
      : link_(link), profile_(profile), trace_(trace), ledger_(ledger), clock_(clock) {}

  void carry(const Wire& w, Role sender) {
    trace_.records.push_back({clock_, w.frame, w.op});
    const double t_air = frame_airtime_s(w.frame, link_);
    clock_ += t_air + link_.ifs_s;

    const double v = profile_.voltage_v * 1e6;
    term(ledger_, sender, w.op) += v * profile_.i_tx_a * t_air;
    term(ledger_, other(sender), w.op) += v * profile_.i_rx_a * t_air;
    if (w.frame.is_ack) {
      const double ifs = v * profile_.i_ifs_a * link_.ifs_slots * link_.ifs_s;
      term(ledger_, sender, w.op) += ifs;
      term(ledger_, other(sender), w.op) += ifs;
    }
  }

 private:
  const LinkConfig& link_;
  const RadioProfile& profile_;
  FrameTrace& trace_;
  EnergyLedger& ledger_;
  double& clock_;
};

void enter(PartyState& party, Phase next) {
  const auto& order = phase_order(party.role);
  const auto cur = std::find(order.begin(), order.end(), party.phase);
  if (cur == order.end() || cur + 1 == order.end() || *(cur + 1) != next) {
    const std::string msg = std::string(to_string(party.role)) + " cannot go from " +
                            std::string(to_string(party.phase)) + " to " +
                            std::string(to_string(next));
    party.phase = Phase::Failed;
    party.history.push_back(Phase::Failed);
    throw HandshakeFailure(msg);
  }
  party.phase = next;
  party.history.push_back(next);
}

template <typename OnEvent>
void pump(Endpoint& peripheral, Endpoint& central, Medium& medium, OnEvent&& on_event) {
  for (;;) {
    bool progressed = false;
    for (Role r : {Role::Peripheral, Role::Central}) {
      Endpoint& from = r == Role::Peripheral ? peripheral : central;
      Endpoint& to = r == Role::Peripheral ? central : peripheral;
      if (auto w = from.poll()) {
        medium.carry(*w, r);
        on_event(other(r), to.receive(*w), *w);
        progressed = true;
      }
    }
    if (!progressed) return;
  }
}

}  // namespace

std::string_view to_string(Role role) {
  return role == Role::Peripheral ? "peripheral" : "central";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "Idle";
    case Phase::KeyGenDone: return "KeyGenDone";
    case Phase::PkSent: return "PkSent";
    case Phase::PkReceived: return "PkReceived";
    case Phase::CtSent: return "CtSent";
    case Phase::CtReceived: return "CtReceived";
    case Phase::Established: return "Established";
    case Phase::Failed: return "Failed";
  }
  return "?";
}

const std::vector<Phase>& phase_order(Role role) {
  static const std::vector<Phase> peripheral{Phase::Idle, Phase::KeyGenDone, Phase::PkSent,
                                             Phase::CtReceived, Phase::Established};
  static const std::vector<Phase> central{Phase::Idle, Phase::PkReceived, Phase::CtSent,
                                          Phase::Established};
  return role == Role::Peripheral ? peripheral : central;
}

std::size_t FrameTrace::data_frame_count(std::optional<TransferOp> op) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
    return !r.frame.is_ack && (!op || r.op == *op);
  }));
}

std::size_t FrameTrace::ack_count(std::optional<TransferOp> op) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
    return r.frame.is_ack && (!op || r.op == *op);
  }));
}

std::string FrameTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json line = {{"time_us", r.time_s * 1e6},
                           {"dir", to_string(r.frame.direction)},
                           {"payload_B", r.frame.payload_bytes},
                           {"overhead_B", r.frame.overhead_bytes},
                           {"op", to_string(r.op)},
                           {"is_ack", r.frame.is_ack}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string EnergyLedger::to_json() const {
  auto components = [](const EnergyComponents& c) {
    return nlohmann::json{{"keygen_uJ", c.keygen},
                          {"decap_uJ", c.decap},
                          {"encap_uJ", c.encap},
                          {"notify_pk_uJ", c.notify_pk},
                          {"write_ct_uJ", c.write_ct}};
  };
  nlohmann::json doc = {
      {"peripheral",
       {{"raw", components(peripheral_raw)},
        {"adjusted", components(peripheral.adjusted)},
        {"pqke_total_uJ", peripheral.e_total},
        {"comm_share", peripheral.comm_share},
        {"payload_uJ", peripheral_payload_uj}}},
      {"central", {{"raw", components(central_raw)}, {"payload_uJ", central_payload_uj}}},
  };
  return doc.dump(2);
}

HandshakeResult run_handshake(const SimulationInputs& in, const CycleTable& cycles,
                              const KemBackend& backend) {
  in.link.validate();
  in.profile.validate();
  in.gamma.validate();
  const KemParamSet& scheme = in.scheme;
  if (!scheme.is_kem() || !scheme.nist_level) {
    throw UnsupportedScheme(scheme.name + " cannot run the post-quantum handshake");
  }
  const CycleCounts& cyc = cycles.at(scheme.name);

  HandshakeResult res;
  res.peripheral.role = Role::Peripheral;
  res.central.role = Role::Central;
  res.peripheral.scheme = scheme;
  res.central.scheme = scheme;

  double clock = 0.0;
  Medium medium(in.link, in.profile, res.trace, res.ledger, clock);
  Endpoint peri_link(Direction::PeripheralToCentral);
  Endpoint central_link(Direction::CentralToPeripheral);
  SharedSecret central_ss{};

  // Step 1: the peripheral generates (pk, sk) and notifies pk.
  res.peripheral.keypair = backend.keygen(scheme, derive_seed(in.seed, "keygen"));
  res.ledger.peripheral_raw.keygen += comp_energy_uj(cyc.keygen, in.profile);
  enter(res.peripheral, Phase::KeyGenDone);
  peri_link.queue(encode_artifact(res.peripheral.keypair->pk, TransferOp::NotifyPk, in.link),
                  TransferOp::NotifyPk);
  central_link.expect(scheme.pk_size, TransferOp::NotifyPk);

  pump(peri_link, central_link, medium, [&](Role receiver, Endpoint::Event ev, const Wire& w) {
    if (receiver == Role::Peripheral && !w.frame.is_ack &&
        res.peripheral.phase != Phase::PkSent) {
      throw HandshakeFailure("ciphertext data before the public key was acknowledged");
    }
    if (ev == Endpoint::Event::None) return;

    if (receiver == Role::Central && ev == Endpoint::Event::ArtifactComplete) {
      // Step 2: the central encapsulates against pk and writes ct.
      res.central.peer_public_key = central_link.take_artifact();
      enter(res.central, Phase::PkReceived);
      Encapsulation enc = backend.encapsulate(res.central.peer_public_key, scheme,
                                              derive_seed(in.seed, "encap"));
      res.ledger.central_raw.encap += comp_energy_uj(cyc.encap, in.profile);
      central_ss = enc.ss;
      res.central.session_key = derive_session_key(enc.ss);
      central_link.queue(encode_artifact(enc.ct, TransferOp::WriteCt, in.link),
                         TransferOp::WriteCt);
      peri_link.expect(scheme.ct_size(), TransferOp::WriteCt);
    } else if (receiver == Role::Peripheral && ev == Endpoint::Event::TransferAcked) {
      enter(res.peripheral, Phase::PkSent);
    } else if (receiver == Role::Peripheral && ev == Endpoint::Event::ArtifactComplete) {
      // Step 3: the peripheral decapsulates and derives the session key.
      const Bytes ct = peri_link.take_artifact();
      enter(res.peripheral, Phase::CtReceived);
      const SharedSecret ss = backend.decapsulate(res.peripheral.keypair->sk, ct, scheme);
      res.ledger.peripheral_raw.decap += comp_energy_uj(cyc.decap, in.profile);
      res.peripheral.session_key = derive_session_key(ss);
      enter(res.peripheral, Phase::Established);
    } else if (receiver == Role::Central && ev == Endpoint::Event::TransferAcked) {
      enter(res.central, Phase::CtSent);
      enter(res.central, Phase::Established);
    }
  });

  if (res.peripheral.phase != Phase::Established || res.central.phase != Phase::Established) {
    throw HandshakeFailure("handshake stalled: peripheral " +
                           std::string(to_string(res.peripheral.phase)) + ", central " +
                           std::string(to_string(res.central.phase)));
  }
  (void)central_ss;

  EnergyBreakdown raw;
  raw.scheme = scheme.name;
  raw.raw = res.ledger.peripheral_raw;
  res.ledger.peripheral = apply_calibration(raw, in.gamma, *scheme.nist_level);
  res.end_time_s = clock;
  return res;
}

PayloadTransfer send_secured_payload(HandshakeResult& session,
                                     std::span<const std::uint8_t> payload,
                                     const LinkConfig& link, const RadioProfile& profile) {
  if (session.peripheral.phase != Phase::Established ||
      session.central.phase != Phase::Established || !session.peripheral.session_key ||
      !session.central.session_key) {
    throw NotEstablished("both parties must finish the handshake before sending payloads");
  }
  link.validate();
  profile.validate();

  // Size transform only: nonce counter | plaintext | zero tag.
  Bytes sealed;
  sealed.reserve(aead_expanded_size(payload.size()));
  const std::uint64_t counter = session.trace.data_frame_count(TransferOp::Payload);
  for (std::size_t i = 0; i < kAeadNonceBytes; ++i) {
    sealed.push_back(i < 8 ? static_cast<std::uint8_t>(counter >> (8 * i)) : 0);
  }
  sealed.insert(sealed.end(), payload.begin(), payload.end());
  sealed.resize(sealed.size() + kAeadTagBytes, 0);

  PayloadTransfer out;
  EnergyLedger& ledger = session.ledger;
  const double before = ledger.peripheral_payload_uj;
  Medium medium(link, profile, out.delta, ledger, session.end_time_s);
  Endpoint peri_link(Direction::PeripheralToCentral);
  Endpoint central_link(Direction::CentralToPeripheral);
  peri_link.queue(encode_artifact(sealed, TransferOp::Payload, link), TransferOp::Payload);
  central_link.expect(sealed.size(), TransferOp::Payload);

  bool delivered = false;
  pump(peri_link, central_link, medium, [&](Role receiver, Endpoint::Event ev, const Wire&) {
    if (receiver == Role::Central && ev == Endpoint::Event::ArtifactComplete) {
      delivered = central_link.take_artifact() == sealed;
    }
  });
  if (!delivered) throw HandshakeFailure("secured payload was not delivered intact");

  out.energy_uj = ledger.peripheral_payload_uj - before;
  session.trace.records.insert(session.trace.records.end(), out.delta.records.begin(),
                               out.delta.records.end());
  return out;
}

}  // namespace pqpan
