#include "fedsim/hash_chain.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <mutex>

#include "fedsim/detail/bytes_io.hpp"

namespace fedsim {

Digest sha256(const std::uint8_t* data, std::size_t size) {
  Digest out;
  SHA256(data, size, out.data());
  return out;
}

Digest sha256(const std::vector<std::uint8_t>& data) {
  return sha256(data.data(), data.size());
}

std::string digest_hex(const Digest& d) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : d) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0x0f]);
  }
  return s;
}

Digest chain_record_digest(const Digest& parent, std::uint8_t kind,
                           const std::vector<std::uint8_t>& body) {
  std::vector<std::uint8_t> buf;
  buf.reserve(parent.size() + 1 + body.size());
  buf.insert(buf.end(), parent.begin(), parent.end());
  buf.push_back(kind);
  buf.insert(buf.end(), body.begin(), body.end());
  return sha256(buf);
}

HashChain::HashChain(const HashChain& other) {
  std::shared_lock lock(other.mu_);
  records_ = other.records_;
}

HashChain& HashChain::operator=(const HashChain& other) {
  if (this == &other) return *this;
  std::vector<ChainRecord> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.records_;
  }
  std::unique_lock lock(mu_);
  records_ = std::move(copy);
  return *this;
}

ChainRecord HashChain::append(std::uint8_t kind, std::vector<std::uint8_t> body) {
  std::unique_lock lock(mu_);
  ChainRecord rec;
  rec.kind = kind;
  rec.parent = records_.empty() ? genesis_digest() : records_.back().digest;
  rec.body = std::move(body);
  rec.digest = chain_record_digest(rec.parent, rec.kind, rec.body);
  records_.push_back(rec);
  return rec;
}

std::size_t HashChain::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

ChainRecord HashChain::at(std::size_t index) const {
  std::shared_lock lock(mu_);
  if (index >= records_.size()) {
    raise(ErrorCode::kNotFound, "chain record " + std::to_string(index) +
                                    " out of range");
  }
  return records_[index];
}

std::vector<ChainRecord> HashChain::snapshot() const {
  std::shared_lock lock(mu_);
  return records_;
}

Digest HashChain::tip() const {
  std::shared_lock lock(mu_);
  return records_.empty() ? genesis_digest() : records_.back().digest;
}

std::optional<std::size_t> HashChain::first_invalid() const {
  std::shared_lock lock(mu_);
  Digest expect_parent = genesis_digest();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const ChainRecord& r = records_[i];
    if (r.parent != expect_parent) return i;
    if (chain_record_digest(r.parent, r.kind, r.body) != r.digest) return i;
    expect_parent = r.digest;
  }
  return std::nullopt;
}

void HashChain::verify() const {
  if (auto bad = first_invalid()) {
    raise(ErrorCode::kChainIntegrity,
          "chain verification failed at record " + std::to_string(*bad));
  }
}

void HashChain::save(const std::filesystem::path& path) const {
  const auto records = snapshot();
  detail::ByteWriter w;
  for (const ChainRecord& r : records) {
    w.put_u32(static_cast<std::uint32_t>(1 + 32 + 32 + r.body.size()));
    w.put_u8(r.kind);
    w.put_bytes(r.parent.data(), r.parent.size());
    w.put_bytes(r.digest.data(), r.digest.size());
    w.put_bytes(r.body.data(), r.body.size());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::kIo, "cannot open " + tmp.string());
    const auto& buf = w.bytes();
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) raise(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

HashChain HashChain::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> buf(std::istreambuf_iterator<char>(in), {});

  HashChain chain;
  detail::ByteReader r(buf);
  while (!r.done()) {
    const std::uint32_t len = r.get_u32();
    if (len < 65 || len > r.remaining()) {
      raise(ErrorCode::kDecode, "chain file record length corrupt");
    }
    ChainRecord rec;
    rec.kind = r.get_u8();
    r.get_bytes(rec.parent.data(), rec.parent.size());
    r.get_bytes(rec.digest.data(), rec.digest.size());
    rec.body.resize(len - 65);
    r.get_bytes(rec.body.data(), rec.body.size());
    chain.records_.push_back(std::move(rec));
  }
  return chain;
}

}  // namespace fedsim
