#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tcpssm/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace tcpssm;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

TEST(TensorIo, RoundTripF64) {
  const std::string path = temp_path("rt_f64.tcpt");
  Tensor t = Tensor::from_f64({2, 3}, {0, 1, 2, 3, 4, 5});
  write_tensor(path, t);
  const Tensor back = read_tensor(path);
  EXPECT_EQ(back.dtype(), DType::f64);
  EXPECT_EQ(back.shape(), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(back.data_f64(), t.data_f64());
  fs::remove(path);
}

TEST(TensorIo, RoundTripF32Bitwise) {
  const std::string path = temp_path("rt_f32.tcpt");
  Tensor t = Tensor::from_f32({5}, {1.5f, -2.25f, 0.1f, 3e-8f, -1e10f});
  write_tensor(path, t);
  const Tensor back = read_tensor(path);
  ASSERT_EQ(back.dtype(), DType::f32);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back.data_f32()[i]),
              std::bit_cast<std::uint32_t>(t.data_f32()[i]));
  }
  fs::remove(path);
}

TEST(TensorIo, Float32PayloadBytes) {
  // 1.0f encodes as 00 00 80 3F little-endian
  const std::string path = temp_path("payload.tcpt");
  write_tensor(path, Tensor::from_f32({1}, {1.0f}));
  std::ifstream f(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(bytes[bytes.size() - 4], 0x00);
  EXPECT_EQ(bytes[bytes.size() - 3], 0x00);
  EXPECT_EQ(bytes[bytes.size() - 2], 0x80);
  EXPECT_EQ(bytes[bytes.size() - 1], 0x3F);
  EXPECT_EQ(bytes[0], 'T');
  EXPECT_EQ(bytes[1], 'C');
  EXPECT_EQ(bytes[2], 'P');
  EXPECT_EQ(bytes[3], 'T');
  fs::remove(path);
}

TEST(TensorIo, EmptyShapeZeroPayload) {
  const std::string path = temp_path("empty.tcpt");
  write_tensor(path, Tensor::zeros(DType::f64, {0}));
  const Tensor back = read_tensor(path);
  EXPECT_EQ(back.numel(), 0u);
  EXPECT_EQ(back.shape(), (std::vector<std::size_t>{0}));
  fs::remove(path);
}

TEST(TensorIo, BadMagicRejected) {
  const std::string path = temp_path("badmagic.tcpt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "XXXX garbage";
  }
  EXPECT_THROW(read_tensor(path), BadMagic);
  fs::remove(path);
}

TEST(TensorIo, TruncatedPayloadRejected) {
  const std::string path = temp_path("trunc.tcpt");
  write_tensor(path, Tensor::from_f64({4}, {1, 2, 3, 4}));
  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 8);
  EXPECT_THROW(read_tensor(path), TruncatedPayload);
  fs::remove(path);
}

TEST(TensorIo, UnknownDtypeRejected) {
  const std::string path = temp_path("dtype.tcpt");
  {
    std::ofstream f(path, std::ios::binary);
    const std::string header = R"({"dtype":"int8","order":"C","shape":[1]})";
    const std::uint32_t len = std::uint32_t(header.size());
    f.write("TCPT", 4);
    f.write(reinterpret_cast<const char*>(&len), 4);
    f << header << '\0';
  }
  EXPECT_THROW(read_tensor(path), DtypeUnsupported);
  fs::remove(path);
}

TEST(TensorIo, MissingFileIsIoFailure) {
  EXPECT_THROW(read_tensor(temp_path("does_not_exist.tcpt")), IoFailure);
}

TEST(TensorIo, IdentityMatrixRoundTrip) {
  const std::string path = temp_path("eye.tcpt");
  write_tensor(path, Tensor::from_f64({2, 2}, {1, 0, 0, 1}));
  const Tensor back = read_tensor(path);
  EXPECT_EQ(back.data_f64(), (std::vector<double>{1, 0, 0, 1}));
  fs::remove(path);
}

}  // namespace
