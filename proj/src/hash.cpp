#include "hash.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <memory>

#include "pqpan/errors.hpp"

namespace pqpan::hash {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

}  // namespace

std::vector<std::uint8_t> shake256(std::initializer_list<Chunk> parts,
                                   std::size_t out_len) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_shake256(), nullptr) != 1) {
    throw Error("SHAKE256 unavailable");
  }
  for (const auto& part : parts) {
    if (!part.empty() &&
        EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
      throw Error("SHAKE256 update failed");
    }
  }
  std::vector<std::uint8_t> out(out_len);
  if (out_len > 0 &&
      EVP_DigestFinalXOF(ctx.get(), out.data(), out.size()) != 1) {
    throw Error("SHAKE256 squeeze failed");
  }
  return out;
}

std::array<std::uint8_t, 32> hmac_sha256(Chunk key, Chunk message) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
           message.data(), message.size(), out.data(), &len) == nullptr ||
      len != out.size()) {
    throw Error("HMAC-SHA256 failed");
  }
  return out;
}

}  // namespace pqpan::hash
