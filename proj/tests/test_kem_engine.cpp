#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "pqpan/errors.hpp"
#include "pqpan/kem_engine.hpp"

using namespace pqpan;

namespace {

Seed counting_seed() {
  Seed s{};
  std::iota(s.begin(), s.end(), 0);
  return s;
}

std::string hex(std::span<const std::uint8_t> b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto x : b) {
    s += d[x >> 4];
    s += d[x & 15];
  }
  return s;
}

}  // namespace

TEST(StubKem, KeygenSizes) {
  StubKemBackend kem;
  const auto kp = kem.keygen(lookup_scheme("ML-KEM-512"), counting_seed());
  EXPECT_EQ(kp.pk.size(), 800u);
  EXPECT_EQ(kp.sk.size(), 1632u);
  EXPECT_EQ(kem.keygen(lookup_scheme("ML-KEM-768"), counting_seed()).pk.size(), 1184u);
}

TEST(StubKem, KeygenIsDeterministic) {
  StubKemBackend kem;
  const auto& s = lookup_scheme("ML-KEM-512");
  const auto a = kem.keygen(s, counting_seed());
  const auto b = kem.keygen(s, counting_seed());
  EXPECT_EQ(a.pk, b.pk);
  EXPECT_EQ(a.sk, b.sk);
}

TEST(StubKem, PublicKeyIsShakeOfSeed) {
  // SHAKE256("pk" || 00 01 .. 1f), first 8 bytes, computed with hashlib.
  StubKemBackend kem;
  const auto kp = kem.keygen(lookup_scheme("ML-KEM-512"), counting_seed());
  EXPECT_EQ(hex(std::span(kp.pk).first(8)), "92a73ea4578306d7");
}

TEST(StubKem, EncapsulateSizesAndDeterminism) {
  StubKemBackend kem;
  const auto& s = lookup_scheme("ML-KEM-1024");
  const auto kp = kem.keygen(s, counting_seed());
  const Seed es = derive_seed(3, "encap");
  const auto a = kem.encapsulate(kp.pk, s, es);
  const auto b = kem.encapsulate(kp.pk, s, es);
  EXPECT_EQ(a.ct.size(), 1568u);
  EXPECT_EQ(a.ct, b.ct);
  EXPECT_EQ(a.ss, b.ss);
}

TEST(StubKem, WrongLengthsThrow) {
  StubKemBackend kem;
  const auto& s = lookup_scheme("ML-KEM-512");
  const auto kp = kem.keygen(s, counting_seed());
  Bytes short_pk(kp.pk.begin(), kp.pk.end() - 1);
  EXPECT_THROW(kem.encapsulate(short_pk, s, counting_seed()), SizeMismatch);
  const auto enc = kem.encapsulate(kp.pk, s, counting_seed());
  Bytes long_ct = enc.ct;
  long_ct.push_back(0);
  EXPECT_THROW(kem.decapsulate(kp.sk, long_ct, s), SizeMismatch);
  EXPECT_THROW(kem.decapsulate(Bytes(10), enc.ct, s), SizeMismatch);
}

TEST(StubKem, SignatureSchemesRejected) {
  StubKemBackend kem;
  EXPECT_THROW(kem.keygen(lookup_scheme("ML-DSA-44"), counting_seed()), UnsupportedScheme);
}

TEST(StubKem, RoundtripsAgree) {
  StubKemBackend kem;
  std::mt19937_64 rng(11);
  for (const auto& s : SchemeCatalog::builtin().ml_kem()) {
    for (int i = 0; i < 50; ++i) {
      const auto kp = kem.keygen(s, derive_seed(rng(), "keygen"));
      const auto enc = kem.encapsulate(kp.pk, s, derive_seed(rng(), "encap"));
      EXPECT_EQ(kem.decapsulate(kp.sk, enc.ct, s), enc.ss);
    }
  }
}

TEST(StubKem, DifferentKeysDifferentSecrets) {
  StubKemBackend kem;
  const auto& s = lookup_scheme("ML-KEM-768");
  const auto a = kem.keygen(s, derive_seed(1, "keygen"));
  const auto b = kem.keygen(s, derive_seed(2, "keygen"));
  const auto enc = kem.encapsulate(a.pk, s, derive_seed(1, "encap"));
  EXPECT_NE(kem.decapsulate(b.sk, enc.ct, s), enc.ss);
}

TEST(KemBackends, Factory) {
  EXPECT_EQ(make_kem_backend("stub")->name(), "stub");
  EXPECT_THROW(make_kem_backend("real"), BackendUnavailable);
  EXPECT_THROW(make_kem_backend("nope"), InvalidConfig);
}

TEST(SessionKey, HmacOfZeroSecret) {
  // HMAC-SHA256(key = 32 zero bytes, "pqke-ble-v1"), computed with Python hmac.
  EXPECT_EQ(hex(derive_session_key(SharedSecret{}).key),
            "a3ff4325532d6a40aa81e809fdd2596f4ed6e05e97714166d387baf656e0800b");
}

TEST(Aead, SizeTransform) {
  static_assert(aead_expanded_size(0) == 28);
  EXPECT_EQ(aead_expanded_size(1024), 1052u);
}

TEST(DeriveSeed, PurposeSeparates) {
  EXPECT_NE(derive_seed(5, "keygen"), derive_seed(5, "encap"));
  EXPECT_EQ(derive_seed(5, "keygen"), derive_seed(5, "keygen"));
  EXPECT_NE(derive_seed(5, "keygen"), derive_seed(6, "keygen"));
}
