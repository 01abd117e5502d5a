#include "disgan/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace disgan {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

// Explicit little-endian field access, independent of host byte order.
void put_u16(std::vector<unsigned char>& b, int off, std::uint16_t v) {
  b[off] = v & 0xFF;
  b[off + 1] = (v >> 8) & 0xFF;
}
void put_u32(std::vector<unsigned char>& b, int off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[off + i] = (v >> (8 * i)) & 0xFF;
}
void put_f32(std::vector<unsigned char>& b, int off, float v) {
  put_u32(b, off, std::bit_cast<std::uint32_t>(v));
}

std::uint16_t get_u16(const unsigned char* b, bool swap) {
  std::uint16_t v = std::uint16_t(b[0]) | (std::uint16_t(b[1]) << 8);
  return swap ? std::uint16_t((v >> 8) | (v << 8)) : v;
}
std::int16_t get_i16(const unsigned char* b, bool swap) {
  return std::bit_cast<std::int16_t>(get_u16(b, swap));
}
std::uint32_t get_u32(const unsigned char* b, bool swap) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  if (swap)
    v = ((v >> 24) & 0xFF) | ((v >> 8) & 0xFF00) | ((v << 8) & 0xFF0000) | (v << 24);
  return v;
}
float get_f32(const unsigned char* b, bool swap) {
  return std::bit_cast<float>(get_u32(b, swap));
}

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open file: " + path);
  f.seekg(0, std::ios::end);
  const auto n = f.tellg();
  f.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(n));
  f.read(reinterpret_cast<char*>(buf.data()), n);
  if (!f) throw TruncatedFile("short read: " + path);
  return buf;
}

void write_file(const std::string& path, const void* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ParseError("cannot open file for writing: " + path);
  f.write(static_cast<const char*>(data), std::streamsize(n));
  f.flush();
  if (!f) throw ParseError("write failed: " + path);
}

Volume read_nifti(const std::string& path) {
  const auto buf = read_file(path);
  if (buf.size() < kHeaderSize)
    throw TruncatedFile("nifti: file shorter than the 348-byte header: " + path);

  // Endianness is decided by sizeof_hdr; dim[0] plausibility is re-checked.
  bool swap = false;
  const std::uint32_t hdr_le = get_u32(&buf[0], false);
  if (hdr_le == 348) {
    swap = false;
  } else if (get_u32(&buf[0], true) == 348) {
    swap = true;
  } else {
    throw ParseError("nifti: sizeof_hdr is not 348 in either byte order");
  }

  char magic[4];
  std::memcpy(magic, &buf[344], 4);
  if (std::memcmp(magic, "ni1\0", 4) == 0)
    throw UnsupportedFormat("nifti: magic \"ni1\" (detached header) is not supported");
  if (std::memcmp(magic, "n+1\0", 4) != 0)
    throw BadMagic("nifti: bad magic field (expected \"n+1\")");

  const int ndim = get_i16(&buf[40], swap);
  if (ndim < 1 || ndim > 7)
    throw ParseError("nifti: dim[0] out of range 1..7");
  int dims[8] = {ndim, 1, 1, 1, 1, 1, 1, 1};
  for (int i = 1; i <= 7; ++i) {
    const int di = get_i16(&buf[40 + 2 * i], swap);
    dims[i] = (i <= ndim) ? di : 1;
    if (i <= ndim && di < 1) throw ParseError("nifti: dim[" + std::to_string(i) + "] must be >= 1");
  }
  for (int i = 4; i <= 7; ++i)
    if (dims[i] > 1)
      throw UnsupportedFormat("nifti: dim[" + std::to_string(i) + "] > 1 (only 3D volumes supported)");

  const int datatype = get_i16(&buf[70], swap);
  if (datatype != 16 && datatype != 4)
    throw UnsupportedDatatype("nifti: datatype code " + std::to_string(datatype) +
                              " (only 16=float32 and 4=int16 supported)");
  const int bitpix = get_i16(&buf[72], swap);
  const int expect_bits = datatype == 16 ? 32 : 16;
  if (bitpix != expect_bits)
    throw ParseError("nifti: bitpix " + std::to_string(bitpix) + " inconsistent with datatype");

  float pixdim[4];
  for (int i = 0; i <= 3; ++i) pixdim[i] = get_f32(&buf[76 + 4 * i], swap);
  for (int i = 1; i <= 3; ++i)
    if (!(pixdim[i] > 0.0f) || !std::isfinite(pixdim[i]))
      throw ParseError("nifti: pixdim[" + std::to_string(i) + "] must be positive");

  const float vox_offset_f = get_f32(&buf[108], swap);
  if (!(vox_offset_f >= kHeaderSize))
    throw ParseError("nifti: vox_offset " + std::to_string(vox_offset_f) + " < 348");
  const std::size_t vox_offset = std::size_t(vox_offset_f);

  const float scl_slope = get_f32(&buf[112], swap);
  const float scl_inter = get_f32(&buf[116], swap);

  // dim[1]=width (fastest), dim[2]=height, dim[3]=depth.
  Volume v(dims[3], dims[2], dims[1]);
  v.spacing = {pixdim[3], pixdim[2], pixdim[1]};
  if (get_i16(&buf[252], swap) > 0)  // qform_code
    v.origin = {get_f32(&buf[276], swap), get_f32(&buf[272], swap), get_f32(&buf[268], swap)};

  const std::size_t nvox = std::size_t(v.numel());
  const std::size_t payload = nvox * (datatype == 16 ? 4 : 2);
  if (buf.size() < vox_offset + payload)
    throw TruncatedFile("nifti: payload truncated (need " + std::to_string(vox_offset + payload) +
                        " bytes, file has " + std::to_string(buf.size()) + ")");

  const unsigned char* p = buf.data() + vox_offset;
  const bool apply_scl = scl_slope != 0.0f && !(scl_slope == 1.0f && scl_inter == 0.0f);
  if (datatype == 16) {
    for (std::size_t i = 0; i < nvox; ++i)
      v.voxels[i] = get_f32(p + 4 * i, swap);
    if (apply_scl)
      for (auto& x : v.voxels) x = x * scl_slope + scl_inter;
  } else {
    for (std::size_t i = 0; i < nvox; ++i) {
      float x = float(get_i16(p + 2 * i, swap));
      v.voxels[i] = apply_scl ? x * scl_slope + scl_inter : x;
    }
  }
  require_finite(v, "nifti read " + path);
  return v;
}

void write_nifti(const Volume& v, const std::string& path) {
  std::vector<unsigned char> hdr(kVoxOffset, 0);
  put_u32(hdr, 0, 348);
  put_u16(hdr, 40, 3);  // dim[0]
  put_u16(hdr, 42, std::uint16_t(v.w()));
  put_u16(hdr, 44, std::uint16_t(v.h()));
  put_u16(hdr, 46, std::uint16_t(v.d()));
  for (int i = 4; i <= 7; ++i) put_u16(hdr, 40 + 2 * i, 1);
  put_u16(hdr, 70, 16);  // datatype float32
  put_u16(hdr, 72, 32);  // bitpix
  put_f32(hdr, 76, 1.0f);  // pixdim[0] (qfac)
  put_f32(hdr, 80, v.spacing[2]);
  put_f32(hdr, 84, v.spacing[1]);
  put_f32(hdr, 88, v.spacing[0]);
  put_f32(hdr, 108, float(kVoxOffset));
  put_f32(hdr, 112, 0.0f);  // scl_slope unset
  hdr[123] = 2;             // xyzt_units: mm
  put_u16(hdr, 252, 1);     // qform_code, identity quaternion
  put_f32(hdr, 268, v.origin[2]);
  put_f32(hdr, 272, v.origin[1]);
  put_f32(hdr, 276, v.origin[0]);
  hdr[344] = 'n';
  hdr[345] = '+';
  hdr[346] = '1';
  hdr[347] = '\0';

  std::vector<unsigned char> out(hdr);
  out.resize(kVoxOffset + v.voxels.size() * 4);
  for (std::size_t i = 0; i < v.voxels.size(); ++i)
    put_u32(out, int(kVoxOffset + 4 * i), std::bit_cast<std::uint32_t>(v.voxels[i]));
  write_file(path, out.data(), out.size());
}

Volume read_rawv(const std::string& path) {
  const std::string sidecar = path + ".json";
  std::ifstream sf(sidecar);
  if (!sf) throw ParseError("rawv: missing sidecar " + sidecar);
  nlohmann::json j;
  try {
    sf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rawv: sidecar parse error in " + sidecar + ": " + e.what());
  }
  if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 3)
    throw ParseError("rawv: sidecar field \"shape\" must be a 3-element array");
  std::array<int, 3> shape{};
  for (int i = 0; i < 3; ++i) {
    shape[i] = j["shape"][i].get<int>();
    if (shape[i] < 1) throw ParseError("rawv: shape entries must be >= 1");
  }
  Volume v(shape[0], shape[1], shape[2]);
  if (j.contains("spacing")) {
    for (int i = 0; i < 3; ++i) v.spacing[i] = j["spacing"][i].get<float>();
    for (float s : v.spacing)
      if (!(s > 0.0f)) throw ParseError("rawv: sidecar field \"spacing\" must be positive");
  }
  if (j.contains("origin"))
    for (int i = 0; i < 3; ++i) v.origin[i] = j["origin"][i].get<float>();

  const auto buf = read_file(path);
  const std::size_t need = std::size_t(v.numel()) * 4;
  if (buf.size() < need)
    throw TruncatedFile("rawv: payload has " + std::to_string(buf.size()) + " bytes, expected " +
                        std::to_string(need));
  if (buf.size() != need)
    throw ParseError("rawv: payload size mismatch (trailing bytes)");
  for (std::size_t i = 0; i < v.voxels.size(); ++i)
    v.voxels[i] = get_f32(buf.data() + 4 * i, false);
  require_finite(v, "rawv read " + path);
  return v;
}

void write_rawv(const Volume& v, const std::string& path) {
  std::vector<unsigned char> out(v.voxels.size() * 4);
  for (std::size_t i = 0; i < v.voxels.size(); ++i)
    put_u32(out, int(4 * i), std::bit_cast<std::uint32_t>(v.voxels[i]));
  write_file(path, out.data(), out.size());
  nlohmann::ordered_json j;
  j["shape"] = {v.d(), v.h(), v.w()};
  j["spacing"] = {v.spacing[0], v.spacing[1], v.spacing[2]};
  j["origin"] = {v.origin[0], v.origin[1], v.origin[2]};
  const std::string s = j.dump();
  write_file(path + ".json", s.data(), s.size());
}

}  // namespace

Volume read_volume(const std::string& path) {
  if (ends_with(path, ".nii")) return read_nifti(path);
  if (ends_with(path, ".rawv")) return read_rawv(path);
  throw UnsupportedFormat("read_volume: unsupported extension (want .nii or .rawv): " + path);
}

void write_volume(const Volume& v, const std::string& path) {
  if (ends_with(path, ".nii")) return write_nifti(v, path);
  if (ends_with(path, ".rawv")) return write_rawv(v, path);
  throw UnsupportedFormat("write_volume: unsupported extension (want .nii or .rawv): " + path);
}

}  // namespace disgan
