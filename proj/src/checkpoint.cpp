#include "thinlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "thinlab/format.hpp"

namespace thinlab {

namespace {

constexpr char kMagic[4] = {'T', 'H', 'L', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void save_common(const std::string& path, int kind, std::uint64_t nx,
                 std::uint64_t nz, double epsilon, double p,
                 const std::vector<double>& coords, const Field* field,
                 std::size_t node_count) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u64(out, nx);
  put_u64(out, nz);
  put_f64(out, epsilon);
  put_f64(out, p);
  put_u64(out, node_count);
  for (double c : coords) put_f64(out, c);
  out.put(field ? 1 : 0);
  if (field) {
    if (field->v.size() != node_count) {
      throw MeshMismatchError("checkpoint: field size does not match mesh");
    }
    for (double v : field->v) put_f64(out, v);
  }
  if (!out) throw Error("short write on checkpoint '" + path + "'");
}

}  // namespace

void save_checkpoint(const std::string& path, const ThinMesh& mesh,
                     const Field* field) {
  if (field) check_field(mesh, *field);
  save_common(path, 1, mesh.nx, mesh.nz, mesh.epsilon, mesh.p, mesh.coords,
              field, mesh.node_count());
}

void save_checkpoint(const std::string& path, const LimitMesh& mesh,
                     const Field* field) {
  if (field) check_field(mesh, *field);
  save_common(path, 2, mesh.nx, 0, 0.0, mesh.p, mesh.x, field,
              mesh.node_count());
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error("checkpoint '" + path + "': bad magic");
  }
  CheckpointData d;
  d.kind = static_cast<int>(get_u32(in));
  d.nx = get_u64(in);
  d.nz = get_u64(in);
  d.epsilon = get_f64(in);
  d.p = get_f64(in);
  std::uint64_t nn = get_u64(in);
  std::size_t per_node = d.kind == 1 ? 2 : 1;
  d.coords.resize(nn * per_node);
  for (double& c : d.coords) c = get_f64(in);
  int has_field = in.get();
  if (has_field == 1) {
    std::vector<double> vals(nn);
    for (double& v : vals) v = get_f64(in);
    d.values = std::move(vals);
  }
  if (!in) throw Error("checkpoint '" + path + "': truncated");
  return d;
}

Field bind_checkpoint(const CheckpointData& data, const ThinMesh& mesh) {
  if (data.kind != 1 || data.nx != static_cast<std::uint64_t>(mesh.nx) ||
      data.nz != static_cast<std::uint64_t>(mesh.nz) ||
      data.epsilon != mesh.epsilon ||
      data.coords.size() != mesh.coords.size()) {
    throw MeshMismatchError("checkpoint geometry does not match thin mesh");
  }
  if (!data.values) throw Error("checkpoint holds no field values");
  Field f = make_field(mesh);
  f.v = *data.values;
  return f;
}

Field bind_checkpoint(const CheckpointData& data, const LimitMesh& mesh) {
  if (data.kind != 2 || data.nx != static_cast<std::uint64_t>(mesh.nx) ||
      data.coords.size() != mesh.x.size()) {
    throw MeshMismatchError("checkpoint geometry does not match limit mesh");
  }
  if (!data.values) throw Error("checkpoint holds no field values");
  Field f = make_field(mesh);
  f.v = *data.values;
  return f;
}

namespace {

void export_rows(const std::string& path, int n,
                 const std::function<void(int, std::ostream&)>& row) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV '" + path + "'");
  out << "index,x,y,value" << kCsvEol;
  for (int i = 0; i < n; ++i) row(i, out);
}

}  // namespace

void export_field_csv(const std::string& path, const ThinMesh& mesh,
                      const Field& field) {
  check_field(mesh, field);
  export_rows(path, mesh.node_count(), [&](int i, std::ostream& out) {
    out << i << ',' << fmt_double(mesh.node_x(i)) << ','
        << fmt_double(mesh.node_y(i)) << ',' << fmt_double(field.v[i])
        << kCsvEol;
  });
}

void export_field_csv(const std::string& path, const LimitMesh& mesh,
                      const Field& field) {
  check_field(mesh, field);
  export_rows(path, mesh.node_count(), [&](int i, std::ostream& out) {
    out << i << ',' << fmt_double(mesh.x[i]) << ",0,"
        << fmt_double(field.v[i]) << kCsvEol;
  });
}

}  // namespace thinlab
