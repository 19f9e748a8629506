#pragma once

// .tcpt container: 4 ASCII bytes "TCPT", a little-endian u32 header length,
// a UTF-8 JSON header {"dtype","shape","order":"C"}, then the row-major
// payload as little-endian IEEE-754.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpssm/errors.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

static_assert(std::endian::native == std::endian::little,
              "payloads are little-endian; big-endian hosts need byte swaps");

inline constexpr char kTensorMagic[4] = {'T', 'C', 'P', 'T'};

inline void write_tensor(const std::string& path, const Tensor& t) {
  nlohmann::json header;
  header["dtype"] = dtype_name(t.dtype());
  header["shape"] = t.shape();
  header["order"] = "C";
  const std::string header_text = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open for writing: " + path);
  f.write(kTensorMagic, 4);
  const std::uint32_t len = std::uint32_t(header_text.size());
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(header_text.data(), std::streamsize(header_text.size()));
  f.write(static_cast<const char*>(t.raw_data()), std::streamsize(t.raw_size()));
  if (!f) throw IoFailure("write failed: " + path);
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open: " + path);

  char magic[4];
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw BadMagic("not a tensor file: " + path);
  }

  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  if (f.gcount() != 4) throw TruncatedPayload("header length missing: " + path);

  std::string header_text(len, '\0');
  f.read(header_text.data(), len);
  if (std::size_t(f.gcount()) != len) throw TruncatedPayload("header truncated: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw TruncatedPayload("header not valid JSON: " + std::string(e.what()));
  }
  const DType dtype = dtype_from_name(header.at("dtype").get<std::string>());
  const auto shape = header.at("shape").get<std::vector<std::size_t>>();

  Tensor t = Tensor::zeros(dtype, shape);
  const std::size_t want = t.raw_size();
  std::vector<char> payload(want);
  f.read(payload.data(), std::streamsize(want));
  if (std::size_t(f.gcount()) != want) {
    throw TruncatedPayload("payload truncated: expected " + std::to_string(want) + " bytes");
  }
  char extra;
  if (f.read(&extra, 1); f.gcount() != 0) {
    throw TruncatedPayload("payload longer than header declares: " + path);
  }
  if (dtype == DType::f32) {
    std::memcpy(t.data_f32().data(), payload.data(), want);
  } else {
    std::memcpy(t.data_f64().data(), payload.data(), want);
  }
  return t;
}

inline std::uint64_t file_fingerprint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace tcpssm
