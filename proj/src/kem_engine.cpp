#include "pqpan/kem_engine.hpp"

#include <algorithm>
#include <string>

#include "hash.hpp"
#include "pqpan/errors.hpp"

namespace pqpan {

namespace {

void expect_length(std::span<const std::uint8_t> bytes, std::size_t expected,
                   const char* what, const KemParamSet& scheme) {
  if (bytes.size() != expected) {
    throw SizeMismatch(std::string(what) + " for " + scheme.name + " must be " +
                       std::to_string(expected) + " bytes, got " +
                       std::to_string(bytes.size()));
  }
}

Bytes stub_public_key(const KemParamSet& scheme, std::span<const std::uint8_t> seed) {
  return hash::shake256({hash::as_bytes("pk"), seed}, scheme.pk_size);
}

}  // namespace

void KemBackend::require_supported(const KemParamSet& scheme) const {
  if (!scheme.is_kem()) {
    throw UnsupportedScheme(scheme.name + " is a signature scheme, not a KEM");
  }
  if (!supports(scheme)) {
    throw UnsupportedScheme("backend '" + std::string(name()) +
                            "' cannot serve " + scheme.name);
  }
}

KemKeyPair KemBackend::keygen(const KemParamSet& scheme, const Seed& seed) const {
  require_supported(scheme);
  KemKeyPair kp = do_keygen(scheme, seed);
  expect_length(kp.pk, scheme.pk_size, "public key", scheme);
  expect_length(kp.sk, scheme.sk_size, "secret key", scheme);
  return kp;
}

Encapsulation KemBackend::encapsulate(std::span<const std::uint8_t> pk,
                                      const KemParamSet& scheme,
                                      const Seed& seed) const {
  require_supported(scheme);
  expect_length(pk, scheme.pk_size, "public key", scheme);
  Encapsulation enc = do_encapsulate(pk, scheme, seed);
  expect_length(enc.ct, scheme.ct_size(), "ciphertext", scheme);
  return enc;
}

SharedSecret KemBackend::decapsulate(std::span<const std::uint8_t> sk,
                                     std::span<const std::uint8_t> ct,
                                     const KemParamSet& scheme) const {
  require_supported(scheme);
  expect_length(sk, scheme.sk_size, "secret key", scheme);
  expect_length(ct, scheme.ct_size(), "ciphertext", scheme);
  return do_decapsulate(sk, ct, scheme);
}

bool StubKemBackend::supports(const KemParamSet& scheme) const {
  // The seed is carried in the first 32 bytes of sk.
  return scheme.is_kem() && scheme.sk_size >= Seed{}.size();
}

KemKeyPair StubKemBackend::do_keygen(const KemParamSet& scheme,
                                     const Seed& seed) const {
  KemKeyPair kp;
  kp.scheme = scheme;
  kp.pk = stub_public_key(scheme, seed);
  kp.sk.assign(seed.begin(), seed.end());
  const Bytes tail = hash::shake256({hash::as_bytes("sk"), seed},
                                    scheme.sk_size - seed.size());
  kp.sk.insert(kp.sk.end(), tail.begin(), tail.end());
  return kp;
}

Encapsulation StubKemBackend::do_encapsulate(std::span<const std::uint8_t> pk,
                                             const KemParamSet& scheme,
                                             const Seed& seed) const {
  Encapsulation enc;
  enc.ct = hash::shake256({hash::as_bytes("ct"), pk, seed}, scheme.ct_size());
  const Bytes ss = hash::shake256({hash::as_bytes("ss"), pk, enc.ct}, enc.ss.size());
  std::copy(ss.begin(), ss.end(), enc.ss.begin());
  return enc;
}

SharedSecret StubKemBackend::do_decapsulate(std::span<const std::uint8_t> sk,
                                            std::span<const std::uint8_t> ct,
                                            const KemParamSet& scheme) const {
  const Bytes pk = stub_public_key(scheme, sk.first(Seed{}.size()));
  const Bytes digest = hash::shake256({hash::as_bytes("ss"), pk, ct}, 32);
  SharedSecret ss{};
  std::copy(digest.begin(), digest.end(), ss.begin());
  return ss;
}

std::unique_ptr<KemBackend> make_kem_backend(std::string_view name) {
  if (name == "stub") return std::make_unique<StubKemBackend>();
  if (name == "real") {
    // TODO: bind liboqs (OQS_KEM_ml_kem_*) once it is available to the build.
    throw BackendUnavailable(
        "kem backend 'real' requires an ML-KEM library; this build has none");
  }
  throw InvalidConfig("unknown kem backend: " + std::string(name));
}

SessionKey derive_session_key(const SharedSecret& ss) {
  return SessionKey{hash::hmac_sha256(ss, hash::as_bytes(kSessionKeyContext))};
}

Seed derive_seed(std::uint64_t master, std::string_view purpose) {
  std::array<std::uint8_t, 8> le{};
  for (std::size_t i = 0; i < le.size(); ++i) {
    le[i] = static_cast<std::uint8_t>(master >> (8 * i));
  }
  const Bytes out = hash::shake256({hash::as_bytes("seed"), le, hash::as_bytes(purpose)},
                                   Seed{}.size());
  Seed seed{};
  std::copy(out.begin(), out.end(), seed.begin());
  return seed;
}

}  // namespace pqpan
