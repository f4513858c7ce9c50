#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "pqpan/reference_data.hpp"

namespace pqpan {

using Bytes = std::vector<std::uint8_t>;
using Seed = std::array<std::uint8_t, 32>;
using SharedSecret = std::array<std::uint8_t, 32>;

struct KemKeyPair {
  Bytes pk;
  Bytes sk;
  KemParamSet scheme;
};

struct Encapsulation {
  Bytes ct;
  SharedSecret ss{};
};

struct SessionKey {
  std::array<std::uint8_t, 32> key{};
  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

/// Key-encapsulation backend. The public entry points validate scheme kind and
/// artifact lengths on both sides of the call; implementations only provide
/// the do_* hooks.
class KemBackend {
 public:
  virtual ~KemBackend() = default;

  virtual std::string_view name() const = 0;
  virtual bool supports(const KemParamSet& scheme) const = 0;

  KemKeyPair keygen(const KemParamSet& scheme, const Seed& seed) const;
  Encapsulation encapsulate(std::span<const std::uint8_t> pk,
                            const KemParamSet& scheme, const Seed& seed) const;
  SharedSecret decapsulate(std::span<const std::uint8_t> sk,
                           std::span<const std::uint8_t> ct,
                           const KemParamSet& scheme) const;

 protected:
  virtual KemKeyPair do_keygen(const KemParamSet& scheme,
                               const Seed& seed) const = 0;
  virtual Encapsulation do_encapsulate(std::span<const std::uint8_t> pk,
                                       const KemParamSet& scheme,
                                       const Seed& seed) const = 0;
  virtual SharedSecret do_decapsulate(std::span<const std::uint8_t> sk,
                                      std::span<const std::uint8_t> ct,
                                      const KemParamSet& scheme) const = 0;

 private:
  void require_supported(const KemParamSet& scheme) const;
};

/// Deterministic stand-in with exact artifact sizes and no lattice math.
///
///   sk = seed || SHAKE256("sk" || seed)      truncated to sk_size
///   pk = SHAKE256("pk" || seed)              to pk_size
///   ct = SHAKE256("ct" || pk || encap_seed)  to ct_size
///   ss = SHAKE256("ss" || pk || ct)          to 32 bytes
///
/// Decapsulation recovers the seed from the first 32 bytes of sk, rebuilds pk
/// and recomputes ss, so roundtrips agree for every seed.
class StubKemBackend final : public KemBackend {
 public:
  std::string_view name() const override { return "stub"; }
  bool supports(const KemParamSet& scheme) const override;

 protected:
  KemKeyPair do_keygen(const KemParamSet& scheme,
                       const Seed& seed) const override;
  Encapsulation do_encapsulate(std::span<const std::uint8_t> pk,
                               const KemParamSet& scheme,
                               const Seed& seed) const override;
  SharedSecret do_decapsulate(std::span<const std::uint8_t> sk,
                              std::span<const std::uint8_t> ct,
                              const KemParamSet& scheme) const override;
};

/// "stub" or "real". The real backend needs an ML-KEM library at build time;
/// without one, asking for it throws BackendUnavailable.
std::unique_ptr<KemBackend> make_kem_backend(std::string_view name);

inline constexpr std::string_view kSessionKeyContext = "pqke-ble-v1";

/// HMAC-SHA256 keyed by the shared secret over the fixed context label.
SessionKey derive_session_key(const SharedSecret& ss);

inline constexpr std::size_t kAeadNonceBytes = 12;
inline constexpr std::size_t kAeadTagBytes = 16;

/// Payload protection is modelled as a size transform only.
constexpr std::size_t aead_expanded_size(std::size_t payload) {
  return kAeadNonceBytes + payload + kAeadTagBytes;
}

/// Derives a per-purpose seed from a master seed, e.g. keygen vs encap.
Seed derive_seed(std::uint64_t master, std::string_view purpose);

}  // namespace pqpan
