#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccap/app/config.hpp"
#include "ccap/app/pipeline.hpp"

namespace ccap::app {

// File layout: "CCAP1", one version byte, then sections of
// [4-byte tag][u64 little-endian length][payload]. CONF and PREP hold JSON;
// STAK and NNET hold binary model parameters.
inline constexpr std::string_view kArtifactMagic = "CCAP1";
inline constexpr std::uint8_t kArtifactVersion = 1;

namespace detail {

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t v) { u64(std::uint64_t(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void f64s(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double x : m.data()) f64(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(in_[pos_ + std::size_t(i)])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return std::int64_t(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t unit = 8) {
    const auto n = u64();
    if (n > (in_.size() - pos_) / unit) throw DataError("artifact: corrupt length field");
    return std::size_t(n);
  }
  std::string str() {
    const auto n = count(1);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> f64s() {
    std::vector<double> v(count());
    for (auto& x : v) x = f64();
    return v;
  }
  Matrix matrix() {
    const auto r = u64();
    const auto c = u64();
    if (c != 0 && r > (in_.size() - pos_) / 8 / c) throw DataError("artifact: corrupt matrix shape");
    Matrix m{std::size_t(r), std::size_t(c)};
    for (auto& x : m.data()) x = f64();
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("artifact: truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

inline void put_tree(Writer& w, const learners::Tree& t) {
  w.u64(t.nodes.size());
  for (const auto& n : t.nodes) {
    w.i64(n.feature);
    w.f64(n.threshold);
    w.i64(n.left);
    w.i64(n.right);
    w.f64(n.value);
    w.f64(n.weight);
    w.f64(n.gain);
    w.i64(n.depth);
  }
}

inline learners::Tree get_tree(Reader& r) {
  learners::Tree t;
  t.nodes.resize(r.count(64));
  for (auto& n : t.nodes) {
    n.feature = int(r.i64());
    n.threshold = r.f64();
    n.left = int(r.i64());
    n.right = int(r.i64());
    n.value = r.f64();
    n.weight = r.f64();
    n.gain = r.f64();
    n.depth = int(r.i64());
  }
  const auto size = std::int64_t(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size)) {
      throw DataError("artifact: tree node points outside the tree");
    }
  }
  if (t.nodes.empty()) throw DataError("artifact: empty tree");
  return t;
}

inline void put_model(Writer& w, const learners::FittedModel& m) {
  w.str(learner_to_json({"model", m.spec}).dump());
  w.u64(m.n_features);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, learners::LogisticModel>) {
          w.f64s(p.weights);
          w.f64(p.intercept);
        } else if constexpr (std::is_same_v<P, learners::SvmModel>) {
          w.f64s(p.weights);
          w.f64(p.bias);
        } else if constexpr (std::is_same_v<P, learners::KnnModel>) {
          w.i64(p.k);
          w.matrix(p.points);
          w.u64(p.labels.size());
          for (int v : p.labels) w.i64(v);
        } else if constexpr (std::is_same_v<P, learners::TreeModel>) {
          put_tree(w, p.tree);
        } else if constexpr (std::is_same_v<P, learners::ForestModel>) {
          w.u64(p.trees.size());
          for (std::size_t i = 0; i < p.trees.size(); ++i) {
            w.u64(p.tree_seeds[i]);
            put_tree(w, p.trees[i]);
          }
        } else if constexpr (std::is_same_v<P, learners::BoostModel>) {
          w.f64(p.base_score);
          w.f64(p.learning_rate);
          w.u64(p.trees.size());
          for (const auto& t : p.trees) put_tree(w, t);
        } else {
          w.f64(p.value);
        }
      },
      m.params);
}

inline learners::FittedModel get_model(Reader& r) {
  learners::FittedModel m;
  m.spec = learner_from_json(json::parse(r.str())).spec;
  m.n_features = std::size_t(r.u64());
  switch (m.kind()) {
    case learners::LearnerKind::lr: {
      learners::LogisticModel p;
      p.weights = r.f64s();
      p.intercept = r.f64();
      m.params = std::move(p);
      break;
    }
    case learners::LearnerKind::svm: {
      learners::SvmModel p;
      p.weights = r.f64s();
      p.bias = r.f64();
      m.params = std::move(p);
      break;
    }
    case learners::LearnerKind::knn: {
      learners::KnnModel p;
      p.k = int(r.i64());
      p.points = r.matrix();
      p.labels.resize(r.count());
      for (auto& v : p.labels) v = int(r.i64());
      if (p.labels.size() != p.points.rows()) throw DataError("artifact: KNN labels do not match its points");
      m.params = std::move(p);
      break;
    }
    case learners::LearnerKind::dt: m.params = learners::TreeModel{get_tree(r)}; break;
    case learners::LearnerKind::rf: {
      learners::ForestModel p;
      const auto n = r.count(16);
      for (std::size_t i = 0; i < n; ++i) {
        p.tree_seeds.push_back(r.u64());
        p.trees.push_back(get_tree(r));
      }
      m.params = std::move(p);
      break;
    }
    case learners::LearnerKind::gb: {
      learners::BoostModel p;
      p.base_score = r.f64();
      p.learning_rate = r.f64();
      const auto n = r.count();
      for (std::size_t i = 0; i < n; ++i) p.trees.push_back(get_tree(r));
      m.params = std::move(p);
      break;
    }
    case learners::LearnerKind::constant: m.params = learners::ConstantModel{r.f64()}; break;
  }
  return m;
}

inline void put_mlp(Writer& w, const neural::MlpModel& m) {
  w.u64(m.spec.hidden.size());
  for (auto h : m.spec.hidden) w.u64(h);
  w.f64(m.spec.learning_rate);
  w.i64(m.spec.epochs);
  w.u64(m.spec.batch_size);
  w.u64(m.spec.seed);
  w.u64(m.spec.embeddings.size());
  for (const auto& e : m.spec.embeddings) {
    w.u64(e.cardinality);
    w.u64(e.width);
  }
  w.u64(m.dense_width);
  w.u64(m.embeddings.size());
  for (const auto& e : m.embeddings) w.matrix(e);
  w.u64(m.layers.size());
  for (const auto& l : m.layers) {
    w.u64(l.in);
    w.u64(l.out);
    w.f64s(l.w);
    w.f64s(l.b);
  }
}

inline neural::MlpModel get_mlp(Reader& r) {
  neural::MlpModel m;
  m.spec.hidden.resize(r.count());
  for (auto& h : m.spec.hidden) h = std::size_t(r.u64());
  m.spec.learning_rate = r.f64();
  m.spec.epochs = int(r.i64());
  m.spec.batch_size = std::size_t(r.u64());
  m.spec.seed = r.u64();
  m.spec.embeddings.resize(r.count(16));
  for (auto& e : m.spec.embeddings) {
    e.cardinality = std::size_t(r.u64());
    e.width = std::size_t(r.u64());
  }
  m.dense_width = std::size_t(r.u64());
  m.embeddings.resize(r.count(16));
  for (auto& e : m.embeddings) e = r.matrix();
  m.layers.resize(r.count(32));
  std::size_t expected_in = m.input_width();
  for (auto& l : m.layers) {
    l.in = std::size_t(r.u64());
    l.out = std::size_t(r.u64());
    l.w = r.f64s();
    l.b = r.f64s();
    if (l.in != expected_in || l.w.size() != l.in * l.out || l.b.size() != l.out) {
      throw DataError("artifact: network layer shapes are inconsistent");
    }
    expected_in = l.out;
  }
  if (m.layers.empty() || m.layers.back().out != 1) throw DataError("artifact: network has no single output unit");
  return m;
}

inline json scaler_to_json(const data::ScalerParams& s) {
  json j = json::array();
  for (const auto& e : s.entries) j.push_back({{"column", e.column}, {"mean", e.mean}, {"std", e.std}});
  return j;
}

inline data::ScalerParams scaler_from_json(const json& j) {
  data::ScalerParams s;
  for (const auto& e : j) s.entries.push_back({e.at("column"), e.at("mean"), e.at("std")});
  return s;
}

inline data::ColumnKind kind_from_name(const std::string& name) {
  for (auto k : {data::ColumnKind::numeric, data::ColumnKind::categorical, data::ColumnKind::identifier}) {
    if (name == data::to_string(k)) return k;
  }
  throw DataError("artifact: unknown column kind '" + name + "'");
}

}  // namespace detail

inline json prep_to_json(const Preprocessor& p) {
  json j;
  j["columns"] = json::array();
  for (const auto& c : p.columns) j["columns"].push_back({{"name", c.name}, {"kind", data::to_string(c.kind)}});
  j["dropped"] = p.dropped;
  j["imputer"] = json::array();
  for (const auto& f : p.imputer.fills) {
    json e{{"column", f.column}, {"kind", data::to_string(f.kind)}};
    if (f.kind == data::ColumnKind::numeric) {
      e["value"] = f.number;
    } else {
      e["value"] = f.category;
    }
    j["imputer"].push_back(e);
  }
  j["vocabulary"] = json::array();
  for (const auto& e : p.vocab.entries) j["vocabulary"].push_back({{"column", e.column}, {"categories", e.categories}});
  j["scaler"] = detail::scaler_to_json(p.scaler);
  j["engineered_scaler"] = detail::scaler_to_json(p.engineered_scaler);
  json pairs = json::array();
  for (const auto& [a, b] : p.recipe.interaction_pairs) pairs.push_back({a, b});
  j["recipe"] = {{"interactions", pairs},
                 {"polynomial_degree", p.recipe.polynomial_degree},
                 {"temporal", p.recipe.temporal_enabled}};
  return j;
}

inline Preprocessor prep_from_json(const json& j) {
  Preprocessor p;
  for (const auto& c : j.at("columns")) p.columns.push_back({c.at("name"), detail::kind_from_name(c.at("kind"))});
  p.dropped = j.at("dropped").get<std::vector<std::string>>();
  for (const auto& e : j.at("imputer")) {
    data::ImputerParams::Fill f;
    f.column = e.at("column");
    f.kind = detail::kind_from_name(e.at("kind"));
    if (f.kind == data::ColumnKind::numeric) {
      f.number = e.at("value");
    } else {
      f.category = e.at("value");
    }
    p.imputer.fills.push_back(std::move(f));
  }
  for (const auto& e : j.at("vocabulary")) p.vocab.entries.push_back({e.at("column"), e.at("categories")});
  p.scaler = detail::scaler_from_json(j.at("scaler"));
  p.engineered_scaler = detail::scaler_from_json(j.at("engineered_scaler"));
  const auto& r = j.at("recipe");
  p.recipe.interaction_pairs.clear();
  for (const auto& pair : r.at("interactions")) p.recipe.interaction_pairs.emplace_back(pair.at(0), pair.at(1));
  p.recipe.polynomial_degree = r.at("polynomial_degree");
  p.recipe.temporal_enabled = r.at("temporal");
  return p;
}

inline std::string serialize(const TrainedPipeline& m) {
  std::string out(kArtifactMagic);
  out.push_back(char(kArtifactVersion));
  const auto section = [&](const char (&tag)[5], const std::string& payload) {
    out.append(tag, 4);
    detail::Writer w;
    w.u64(payload.size());
    out += w.take();
    out += payload;
  };
  section("CONF", to_json(m.config).dump());
  section("PREP", prep_to_json(m.prep).dump());

  detail::Writer stack;
  stack.u64(m.stack.bases.size());
  for (std::size_t b = 0; b < m.stack.bases.size(); ++b) {
    stack.str(m.stack.base_names[b]);
    detail::put_model(stack, m.stack.bases[b]);
  }
  detail::put_mlp(stack, m.stack.meta);
  stack.u64(m.stack.n_features);
  stack.u64(m.stack.dense_columns.size());
  for (auto c : m.stack.dense_columns) stack.u64(c);
  stack.u64(m.stack.uses_embeddings ? 1 : 0);
  section("STAK", stack.take());

  detail::Writer nn;
  detail::put_mlp(nn, m.nn);
  section("NNET", nn.take());
  return out;
}

inline TrainedPipeline deserialize(std::string_view bytes) {
  if (bytes.size() < kArtifactMagic.size() + 1 || bytes.substr(0, kArtifactMagic.size()) != kArtifactMagic) {
    throw DataError("not a model artifact (bad magic)");
  }
  const auto version = std::uint8_t(bytes[kArtifactMagic.size()]);
  if (version != kArtifactVersion) {
    throw DataError("unsupported artifact version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kArtifactVersion) + ")");
  }
  std::map<std::string, std::string_view> sections;
  std::size_t pos = kArtifactMagic.size() + 1;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 12) throw DataError("artifact: truncated section header");
    const std::string tag(bytes.substr(pos, 4));
    detail::Reader len(bytes.substr(pos + 4, 8));
    const auto n = len.u64();
    pos += 12;
    if (n > bytes.size() - pos) throw DataError("artifact: section '" + tag + "' is truncated");
    sections[tag] = bytes.substr(pos, std::size_t(n));
    pos += std::size_t(n);
  }
  for (const char* tag : {"CONF", "PREP", "STAK", "NNET"}) {
    if (!sections.count(tag)) throw DataError(std::string("artifact: missing section ") + tag);
  }

  TrainedPipeline m;
  try {
    m.config = config_from_json(json::parse(sections["CONF"]));
    m.prep = prep_from_json(json::parse(sections["PREP"]));
  } catch (const json::exception& e) {
    throw DataError(std::string("artifact: malformed header: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("artifact: ") + e.what());
  }

  detail::Reader stack(sections["STAK"]);
  const auto nb = stack.count();
  for (std::size_t b = 0; b < nb; ++b) {
    m.stack.base_names.push_back(stack.str());
    m.stack.bases.push_back(detail::get_model(stack));
  }
  m.stack.meta = detail::get_mlp(stack);
  m.stack.n_features = std::size_t(stack.u64());
  m.stack.dense_columns.resize(stack.count());
  for (auto& c : m.stack.dense_columns) c = std::size_t(stack.u64());
  m.stack.uses_embeddings = stack.u64() != 0;
  if (!stack.done()) throw DataError("artifact: trailing bytes in STAK");

  detail::Reader nn(sections["NNET"]);
  m.nn = detail::get_mlp(nn);
  if (!nn.done()) throw DataError("artifact: trailing bytes in NNET");
  return m;
}

// Writes through a temporary file so a failed save never leaves a partial
// artifact behind.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("failed writing '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline void save_artifact(const std::filesystem::path& path, const TrainedPipeline& m) {
  write_file_atomic(path, serialize(m));
}

inline TrainedPipeline load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read artifact '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return deserialize(bytes);
}

}  // namespace ccap::app
