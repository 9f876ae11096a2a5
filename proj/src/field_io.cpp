#include "polaron/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "polaron/errors.hpp"

namespace polaron {

namespace {

uint64_t to_le(uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return v;
}

}  // namespace

void write_snapshot(const ComplexField& f, const std::string& base) {
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot open " + base + ".bin for writing");
  std::vector<uint64_t> buf(2 * f.size());
  for (std::size_t n = 0; n < f.size(); ++n) {
    double re = f[n].real(), im = f[n].imag();
    uint64_t a, b;
    std::memcpy(&a, &re, 8);
    std::memcpy(&b, &im, 8);
    buf[2 * n] = to_le(a);
    buf[2 * n + 1] = to_le(b);
  }
  bin.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * 8));
  if (!bin) throw Error("write failed for " + base + ".bin");

  nlohmann::ordered_json j;
  j["format"] = "raw little-endian float64 (re, im) pairs, row-major over (x, y, z)";
  j["L"] = f.g().L();
  j["N"] = f.g().N();
  j["role"] = role_name(f.role());
  j["fourier_convention"] = kFourierConvention;
  std::ofstream js(base + ".json");
  js << j.dump(2) << "\n";
  if (!js) throw Error("write failed for " + base + ".json");
}

ComplexField read_snapshot(const std::string& base) {
  std::ifstream js(base + ".json");
  if (!js) throw Error("cannot open " + base + ".json");
  nlohmann::json j = nlohmann::json::parse(js);
  GridPtr g = make_grid(j.at("L").get<double>(), j.at("N").get<int>());
  Role role = role_from_name(j.at("role").get<std::string>());
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot open " + base + ".bin");
  std::vector<uint64_t> buf(2 * g->size());
  bin.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * 8));
  if (bin.gcount() != std::streamsize(buf.size() * 8)) throw Error("snapshot " + base + ".bin is truncated");
  CVec v(g->size());
  for (std::size_t n = 0; n < v.size(); ++n) {
    uint64_t a = to_le(buf[2 * n]), b = to_le(buf[2 * n + 1]);
    double re, im;
    std::memcpy(&re, &a, 8);
    std::memcpy(&im, &b, 8);
    v[n] = cplx(re, im);
  }
  return ComplexField(g, std::move(v), role);
}

}  // namespace polaron
