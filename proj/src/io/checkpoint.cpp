#include "inneratt/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "inneratt/nn/errors.hpp"

namespace inneratt::io {

namespace {

constexpr char kMagic[4] = {'I', 'A', 'T', 'T'};
constexpr std::size_t kRobots = env::kRobotCount;
constexpr std::size_t kObs = env::kObservationSize;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    T out = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      out = static_cast<T>((out << 8) | ((v >> (8 * k)) & 0xff));
    }
    return out;
  }
  return v;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    v = to_little(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_double(double d) { put(std::bit_cast<std::uint64_t>(d)); }
  void put_bytes(const std::string& s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  double get_double(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }
  std::string get_bytes(std::uint64_t n, const char* what) {
    need(n, what);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n, const char* what) {
    if (n > in_.size() - pos_) {
      throw TruncatedError(std::string("file ends inside ") + what);
    }
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

Section array_section(const std::string& name, const nn::NdArray& a) {
  Section s{name, {}, {a.data().begin(), a.data().end()}};
  for (std::size_t d : a.shape()) s.dims.push_back(d);
  return s;
}

void add_params(std::vector<Section>& out, const std::string& prefix,
                const nn::ConstParamList& params) {
  for (const auto& p : params) out.push_back(array_section(prefix + p.name, *p.array));
}

void add_adam(std::vector<Section>& out, const std::string& prefix,
              const nn::ConstParamList& params, const nn::AdamState& s) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    out.push_back(array_section(prefix + "m." + params[k].name, s.first.at(k)));
    out.push_back(array_section(prefix + "v." + params[k].name, s.second.at(k)));
  }
  out.push_back({prefix + "step", {1}, {static_cast<double>(s.step)}});
}

class SectionIndex {
 public:
  explicit SectionIndex(const std::vector<Section>& sections) {
    for (const Section& s : sections) {
      if (!by_name_.emplace(s.name, &s).second) {
        throw CheckpointError("duplicate section '" + s.name + "'");
      }
    }
  }
  const Section& at(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw CheckpointError("missing section '" + name + "'");
    return *it->second;
  }
  bool has(const std::string& name) const { return by_name_.count(name) != 0; }
  void fill(const std::string& name, nn::NdArray& into) const {
    const Section& s = at(name);
    std::vector<std::uint64_t> want(into.shape().begin(), into.shape().end());
    if (s.dims != want) throw CheckpointError("section '" + name + "' has the wrong shape");
    std::copy(s.data.begin(), s.data.end(), into.data().begin());
  }
  const Section& sized(const std::string& name, std::vector<std::uint64_t> dims) const {
    const Section& s = at(name);
    if (s.dims != dims) throw CheckpointError("section '" + name + "' has the wrong shape");
    return s;
  }

 private:
  std::map<std::string, const Section*> by_name_;
};

void read_params(const SectionIndex& idx, const std::string& prefix, const nn::ParamList& params) {
  for (const auto& p : params) idx.fill(prefix + p.name, *p.array);
}

void read_adam(const SectionIndex& idx, const std::string& prefix, const nn::ParamList& params,
               nn::AdamState& s) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    idx.fill(prefix + "m." + params[k].name, s.first.at(k));
    idx.fill(prefix + "v." + params[k].name, s.second.at(k));
  }
  s.step = static_cast<std::uint64_t>(idx.sized(prefix + "step", {1}).data[0]);
}

std::size_t as_count(double v) { return static_cast<std::size_t>(v); }

}  // namespace

std::vector<Section> to_sections(const Checkpoint& c) {
  const train::TrainerState& s = c.state;
  std::vector<Section> out;
  add_params(out, "", s.actor.parameters());
  add_params(out, "", s.critic.parameters());
  add_params(out, "target.", s.target.parameters());
  add_adam(out, "adam.actor.", s.actor.parameters(), s.actor_opt);
  add_adam(out, "adam.critic.", s.critic.parameters(), s.critic_opt);
  out.push_back({"counters",
                 {4},
                 {static_cast<double>(s.episodes_done), static_cast<double>(s.env_steps),
                  static_cast<double>(s.steps_since_update), static_cast<double>(s.updates)}});
  const train::MetricsAccumulator& m = s.metrics;
  out.push_back({"metrics.sums",
                 {8},
                 {static_cast<double>(m.episodes), m.reward, static_cast<double>(m.critic_updates),
                  m.critic_loss, static_cast<double>(m.actor_updates), m.actor_loss,
                  static_cast<double>(m.rescues[0]), static_cast<double>(m.rescues[1])}});
  out.push_back({"metrics.entropy", {m.entropy.size()}, m.entropy});

  if (c.config.train.checkpoint_replay) {
    const std::size_t n = s.buffer.size();
    Section obs{"replay.obs", {n, kRobots, kObs}, {}};
    Section next{"replay.next_obs", {n, kRobots, kObs}, {}};
    Section act{"replay.actions", {n, kRobots}, {}};
    Section rew{"replay.rewards", {n, kRobots}, {}};
    Section done{"replay.done", {n}, {}};
    for (std::size_t k = 0; k < n; ++k) {
      const train::Transition& t = s.buffer.at(k);
      for (std::size_t i = 0; i < kRobots; ++i) {
        obs.data.insert(obs.data.end(), t.obs[i].begin(), t.obs[i].end());
        next.data.insert(next.data.end(), t.next_obs[i].begin(), t.next_obs[i].end());
        act.data.push_back(static_cast<double>(t.actions[i]));
        rew.data.push_back(t.rewards[i]);
      }
      done.data.push_back(t.done ? 1.0 : 0.0);
    }
    for (Section* sec : {&obs, &next, &act, &rew, &done}) out.push_back(std::move(*sec));
  }

  const train::PpoSegment& seg = s.segment;
  const std::size_t n = seg.size();
  const std::size_t a_dim = n ? seg.behavior_probs.at(0).cols() : env::kActionCount;
  Section obs{"ppo.obs", {n, kRobots, kObs}, {}};
  Section act{"ppo.actions", {n, kRobots}, {}};
  Section rew{"ppo.rewards", {n, kRobots}, {}};
  Section done{"ppo.done", {n}, seg.steps.done};
  Section probs{"ppo.probs", {n, kRobots, a_dim}, {}};
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < kRobots; ++i) {
      auto o = seg.steps.obs[i].data().subspan(b * kObs, kObs);
      obs.data.insert(obs.data.end(), o.begin(), o.end());
      act.data.push_back(static_cast<double>(seg.steps.actions[i][b]));
      rew.data.push_back(seg.steps.rewards(b, i));
      auto p = seg.behavior_probs[i].data().subspan(b * a_dim, a_dim);
      probs.data.insert(probs.data.end(), p.begin(), p.end());
    }
  }
  for (Section* sec : {&obs, &act, &rew, &done, &probs}) out.push_back(std::move(*sec));
  return out;
}

Checkpoint from_sections(const ExperimentConfig& config, const std::vector<Section>& sections) {
  SectionIndex idx(sections);
  Checkpoint c{config, train::TrainerState::initial(config.train)};
  train::TrainerState& s = c.state;
  read_params(idx, "", s.actor.parameters());
  read_params(idx, "", s.critic.parameters());
  read_params(idx, "target.", s.target.parameters());
  read_adam(idx, "adam.actor.", s.actor.parameters(), s.actor_opt);
  read_adam(idx, "adam.critic.", s.critic.parameters(), s.critic_opt);

  const auto& counters = idx.sized("counters", {4}).data;
  s.episodes_done = as_count(counters[0]);
  s.env_steps = as_count(counters[1]);
  s.steps_since_update = as_count(counters[2]);
  s.updates = as_count(counters[3]);
  const auto& sums = idx.sized("metrics.sums", {8}).data;
  s.metrics.episodes = as_count(sums[0]);
  s.metrics.reward = sums[1];
  s.metrics.critic_updates = as_count(sums[2]);
  s.metrics.critic_loss = sums[3];
  s.metrics.actor_updates = as_count(sums[4]);
  s.metrics.actor_loss = sums[5];
  s.metrics.rescues = {as_count(sums[6]), as_count(sums[7])};
  s.metrics.entropy = idx.sized("metrics.entropy", {config.train.heads}).data;

  if (config.train.checkpoint_replay) {
    const Section& done = idx.at("replay.done");
    if (done.dims.size() != 1) throw CheckpointError("section 'replay.done' has the wrong shape");
    const std::uint64_t n = done.dims[0];
    if (n > config.train.buffer_capacity) throw CheckpointError("replay larger than capacity");
    const auto& obs = idx.sized("replay.obs", {n, kRobots, kObs}).data;
    const auto& next = idx.sized("replay.next_obs", {n, kRobots, kObs}).data;
    const auto& act = idx.sized("replay.actions", {n, kRobots}).data;
    const auto& rew = idx.sized("replay.rewards", {n, kRobots}).data;
    for (std::size_t k = 0; k < n; ++k) {
      train::Transition t;
      for (std::size_t i = 0; i < kRobots; ++i) {
        const std::size_t off = (k * kRobots + i) * kObs;
        std::copy_n(obs.begin() + off, kObs, t.obs[i].begin());
        std::copy_n(next.begin() + off, kObs, t.next_obs[i].begin());
        t.actions[i] = as_count(act[k * kRobots + i]);
        t.rewards[i] = rew[k * kRobots + i];
      }
      t.done = done.data[k] != 0.0;
      s.buffer.push(t);
    }
  } else if (idx.has("replay.done")) {
    throw CheckpointError("replay sections present but checkpoint_replay is off");
  }

  const Section& pdone = idx.at("ppo.done");
  if (pdone.dims.size() != 1) throw CheckpointError("section 'ppo.done' has the wrong shape");
  const std::uint64_t n = pdone.dims[0];
  const Section& probs = idx.at("ppo.probs");
  if (probs.dims.size() != 3 || probs.dims[0] != n || probs.dims[1] != kRobots) {
    throw CheckpointError("section 'ppo.probs' has the wrong shape");
  }
  const std::size_t a_dim = probs.dims[2];
  const auto& obs = idx.sized("ppo.obs", {n, kRobots, kObs}).data;
  const auto& act = idx.sized("ppo.actions", {n, kRobots}).data;
  const auto& rew = idx.sized("ppo.rewards", {n, kRobots}).data;
  for (std::size_t b = 0; b < n; ++b) {
    train::Transition t;
    std::vector<std::vector<double>> p(kRobots);
    for (std::size_t i = 0; i < kRobots; ++i) {
      std::copy_n(obs.begin() + (b * kRobots + i) * kObs, kObs, t.obs[i].begin());
      t.actions[i] = as_count(act[b * kRobots + i]);
      t.rewards[i] = rew[b * kRobots + i];
      auto first = probs.data.begin() + (b * kRobots + i) * a_dim;
      p[i].assign(first, first + a_dim);
    }
    t.done = pdone.data[b] != 0.0;
    s.segment.append(t, p);
  }
  return c;
}

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.put_bytes(std::string(kMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  const std::string config = dump_config(c.config);
  w.put<std::uint64_t>(config.size());
  w.put_bytes(config);
  const std::vector<Section> sections = to_sections(c);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sections.size()));
  for (const Section& s : sections) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.name.size()));
    w.put_bytes(s.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.dims.size()));
    for (std::uint64_t d : s.dims) w.put<std::uint64_t>(d);
    for (double v : s.data) w.put_double(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4) throw TruncatedError("file shorter than the magic number");
  if (bytes.compare(0, 4, kMagic, 4) != 0) throw BadMagicError("not an IATT checkpoint");
  Reader r(bytes);
  r.get_bytes(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw VersionError("file has version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  }
  const auto config_len = r.get<std::uint64_t>("config length");
  const std::string config_text = r.get_bytes(config_len, "config");
  const auto count = r.get<std::uint32_t>("section count");
  std::vector<Section> sections;
  for (std::uint32_t k = 0; k < count; ++k) {
    Section s;
    s.name = r.get_bytes(r.get<std::uint32_t>("section name length"), "section name");
    const auto ndim = r.get<std::uint32_t>("section rank");
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      s.dims.push_back(r.get<std::uint64_t>("section shape"));
      if (s.dims.back() != 0 && total > (bytes.size() / 8) / s.dims.back()) {
        throw TruncatedError("section '" + s.name + "' is larger than the file");
      }
      total *= s.dims.back();
    }
    if (total > bytes.size() / 8) throw TruncatedError("section '" + s.name + "' data");
    s.data.reserve(total);
    for (std::uint64_t i = 0; i < total; ++i) s.data.push_back(r.get_double("section data"));
    sections.push_back(std::move(s));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after the last section");
  ExperimentConfig config;
  try {
    config = parse_config_text(config_text);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("embedded config: ") + e.what());
  }
  return from_sections(config, sections);
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  // Write to a sibling and rename so readers never see a partial file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace inneratt::io
