#include "kgpath/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "kgpath/binary_io.hpp"

namespace kgpath {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'P', 'M', 'O', 'D', 'L', '1'};

void write_points(std::ostream& out, const Eigen::MatrixXd& m) {
  binary::write_f64s(out, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

void write_points(std::ostream& out, const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    binary::write_f64(out, m.data()[i].real());
    binary::write_f64(out, m.data()[i].imag());
  }
}

void read_points(std::istream& in, Eigen::MatrixXd& m) {
  binary::read_f64s(in, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
}

void read_points(std::istream& in, Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double re = binary::read_f64(in);
    const double im = binary::read_f64(in);
    m.data()[i] = {re, im};
  }
}

}  // namespace

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  const auto& model = file.model;
  if (model.entity_count() != static_cast<Eigen::Index>(file.entity_names.size()) ||
      model.label_count() != 2 * static_cast<Eigen::Index>(file.relation_names.size())) {
    throw std::invalid_argument("save_model: id maps do not match model shape");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  binary::write_u32(out, static_cast<std::uint32_t>(model.kind()));
  binary::write_u32(out, 0);
  binary::write_u64(out, static_cast<std::uint64_t>(model.dim()));
  binary::write_u64(out, static_cast<std::uint64_t>(model.entity_count()));
  binary::write_u64(out, static_cast<std::uint64_t>(file.relation_names.size()));
  binary::write_u64(out, file.fingerprint);
  model.visit([&](const auto& m) {
    write_points(out, m.entity_attention);
    write_points(out, m.entity_points);
    write_points(out, m.relation_attention);
    write_points(out, m.relation_points);
  });
  for (const auto& name : file.entity_names) binary::write_string(out, name);
  for (const auto& name : file.relation_names) binary::write_string(out, name);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a model file");
  }
  const auto kind_raw = binary::read_u32(in);
  if (kind_raw > 2) throw std::runtime_error("unknown group kind in " + path.string());
  binary::read_u32(in);
  const auto dim = static_cast<Eigen::Index>(binary::read_u64(in));
  const auto entities = static_cast<Eigen::Index>(binary::read_u64(in));
  const auto relations = static_cast<Eigen::Index>(binary::read_u64(in));

  ModelFile file;
  file.fingerprint = binary::read_u64(in);
  auto fill = [&](auto embedding) {
    embedding.entity_attention.resize(dim, entities);
    embedding.entity_points.resize(dim, entities);
    embedding.relation_attention.resize(dim, 2 * relations);
    embedding.relation_points.resize(dim, 2 * relations);
    read_points(in, embedding.entity_attention);
    read_points(in, embedding.entity_points);
    read_points(in, embedding.relation_attention);
    read_points(in, embedding.relation_points);
    file.model = AkglgModel(std::move(embedding));
  };
  switch (static_cast<GroupKind>(kind_raw)) {
    case GroupKind::sign:
      fill(SignEmbedding{});
      break;
    case GroupKind::circle:
      fill(CircleEmbedding{});
      break;
    case GroupKind::line:
      fill(LineEmbedding{});
      break;
  }
  file.entity_names.reserve(static_cast<std::size_t>(entities));
  for (Eigen::Index i = 0; i < entities; ++i) file.entity_names.push_back(binary::read_string(in));
  file.relation_names.reserve(static_cast<std::size_t>(relations));
  for (Eigen::Index i = 0; i < relations; ++i) file.relation_names.push_back(binary::read_string(in));
  return file;
}

}  // namespace kgpath
