#include "otpl/td3.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace otpl {

Eigen::RowVector3d normalize_vehicle(const VehicleFeatures& f,
                                     const FeatureNorm& n) {
  return {f.d_rel / n.radius, f.v_rel, f.lane_rel / n.lane_scale};
}

Eigen::RowVectorXd normalize_ego(const EgoFeatures& f, const FeatureNorm& n) {
  Eigen::RowVectorXd e(kEgoFeatureDim);
  e << f.v_rl / n.v_des, static_cast<double>(f.ll_valid),
      static_cast<double>(f.rl_valid), f.pos_lat / n.road_width,
      f.lon_a / n.acc_scale, f.lat_v / n.lat_v_scale, f.lat_a / n.acc_scale;
  return e;
}

namespace {

double norm_axis(double x, const AxisBounds& b) {
  return 2.0 * (x - b.lo) / (b.hi - b.lo) - 1.0;
}
double denorm_axis(double x, const AxisBounds& b) {
  return b.lo + 0.5 * (x + 1.0) * (b.hi - b.lo);
}

}  // namespace

Eigen::Vector4d normalize_action(const Action& a, const ActionBounds& b) {
  return {norm_axis(a.a_tv, b.a_tv), norm_axis(a.a_lon_d, b.a_lon_d),
          norm_axis(a.a_lat_d, b.a_lat_d), norm_axis(a.a_lp, b.a_lp)};
}

Action denormalize_action(const Eigen::Vector4d& n, const ActionBounds& b) {
  Action a;
  a.a_tv = denorm_axis(n(0), b.a_tv);
  a.a_lon_d = denorm_axis(n(1), b.a_lon_d);
  a.a_lat_d = denorm_axis(n(2), b.a_lat_d);
  a.a_lp = denorm_axis(n(3), b.a_lp);
  return a;
}

std::string buffer_checksum(const std::vector<Transition>& transitions) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_d = [&](double x) { mix(&x, sizeof(x)); };
  auto mix_state = [&](const RLState& s) {
    for (const auto& v : s.vehicles) {
      mix_d(v.d_rel);
      mix_d(v.v_rel);
      mix_d(static_cast<double>(v.lane_rel));
    }
    mix_d(s.ego.v_rl);
    mix_d(static_cast<double>(s.ego.ll_valid));
    mix_d(static_cast<double>(s.ego.rl_valid));
    mix_d(s.ego.pos_lat);
    mix_d(s.ego.lon_a);
    mix_d(s.ego.lat_v);
    mix_d(s.ego.lat_a);
  };
  for (const auto& t : transitions) {
    mix_state(t.s);
    for (double x : t.a) mix_d(x);
    mix_d(t.r);
    mix_state(t.s2);
    mix_d(static_cast<double>(t.done));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

ReplayBuffer::ReplayBuffer(std::vector<Transition> transitions,
                           const FeatureNorm& norm)
    : transitions_(std::move(transitions)) {
  const auto n = transitions_.size();
  std::size_t rows_s = 0, rows_s2 = 0;
  for (const auto& t : transitions_) {
    rows_s += t.s.vehicles.size();
    rows_s2 += t.s2.vehicles.size();
  }
  veh_s.resize(static_cast<Eigen::Index>(rows_s), 3);
  veh_s2.resize(static_cast<Eigen::Index>(rows_s2), 3);
  ego_s.resize(static_cast<Eigen::Index>(n), kEgoFeatureDim);
  ego_s2.resize(static_cast<Eigen::Index>(n), kEgoFeatureDim);
  actions.resize(static_cast<Eigen::Index>(n), kActionDim);
  rewards.resize(static_cast<Eigen::Index>(n));
  done.resize(static_cast<Eigen::Index>(n));
  off_s.assign(n + 1, 0);
  off_s2.assign(n + 1, 0);

  Eigen::Index r1 = 0, r2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = transitions_[i];
    for (const auto& v : t.s.vehicles) veh_s.row(r1++) = normalize_vehicle(v, norm);
    for (const auto& v : t.s2.vehicles) veh_s2.row(r2++) = normalize_vehicle(v, norm);
    off_s[i + 1] = static_cast<int>(r1);
    off_s2[i + 1] = static_cast<int>(r2);
    ego_s.row(static_cast<Eigen::Index>(i)) = normalize_ego(t.s.ego, norm);
    ego_s2.row(static_cast<Eigen::Index>(i)) = normalize_ego(t.s2.ego, norm);
    for (int k = 0; k < kActionDim; ++k) {
      actions(static_cast<Eigen::Index>(i), k) = t.a[static_cast<std::size_t>(k)];
    }
    rewards(static_cast<Eigen::Index>(i)) = t.r;
    done(static_cast<Eigen::Index>(i)) = static_cast<double>(t.done);
  }
}

TrainedAgent TrainedAgent::make(const TD3Hyperparams& hp, const NetSizes& sizes,
                                const FeatureNorm& norm,
                                const ActionBounds& bounds,
                                std::uint64_t seed) {
  TrainedAgent a;
  a.hp = hp;
  a.sizes = sizes;
  a.norm = norm;
  a.bounds = bounds;
  a.seed = seed;
  std::mt19937_64 rng(seed);
  a.encoder = DeepSets::make(sizes.encoder, rng);
  const int d_state = a.encoder.output_dim() + kEgoFeatureDim;
  a.actor = DenseNet::make(
      {d_state, sizes.actor_hidden1, sizes.actor_hidden2, kActionDim},
      {Activation::ReLU, Activation::ReLU, Activation::TanH}, rng);
  for (int i = 0; i < hp.n_critics; ++i) {
    a.critics.push_back(DenseNet::make(
        {d_state + kActionDim, sizes.critic_hidden1, sizes.critic_hidden2, 1},
        {Activation::ReLU, Activation::ReLU, Activation::Identity}, rng));
  }
  a.encoder_target = a.encoder;
  a.actor_target = a.actor;
  a.critic_targets = a.critics;
  a.phi_opt = AdamState::make(a.encoder.phi);
  a.rho_opt = AdamState::make(a.encoder.rho);
  a.actor_opt = AdamState::make(a.actor);
  for (const auto& c : a.critics) a.critic_opt.push_back(AdamState::make(c));
  return a;
}

Action TrainedAgent::act(const RLState& s) const {
  Eigen::MatrixXd elems(static_cast<Eigen::Index>(s.vehicles.size()), 3);
  for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
    elems.row(static_cast<Eigen::Index>(i)) =
        normalize_vehicle(s.vehicles[i], norm);
  }
  Eigen::MatrixXd x(1, state_dim());
  x << encoder.encode(elems).transpose(), normalize_ego(s.ego, norm);
  const Eigen::MatrixXd out = actor.forward(x);
  return denormalize_action(out.row(0).transpose(), bounds);
}

namespace {

// Gathers the per-transition vehicle segments for a minibatch into one
// stacked matrix plus fresh offsets.
void gather_sets(const Eigen::MatrixXd& all, const std::vector<int>& off,
                 const std::vector<int>& idx, Eigen::MatrixXd* out,
                 std::vector<int>* out_off) {
  int total = 0;
  for (int i : idx) total += off[i + 1] - off[i];
  out->resize(total, all.cols());
  out_off->assign(idx.size() + 1, 0);
  int r = 0;
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const int i = idx[b];
    const int cnt = off[i + 1] - off[i];
    if (cnt > 0) out->middleRows(r, cnt) = all.middleRows(off[i], cnt);
    r += cnt;
    (*out_off)[b + 1] = r;
  }
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& all,
                            const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), all.cols());
  for (std::size_t b = 0; b < idx.size(); ++b) {
    out.row(static_cast<Eigen::Index>(b)) = all.row(idx[b]);
  }
  return out;
}

}  // namespace

IterationDiagnostics td3_iteration(TrainedAgent& agent,
                                   const ReplayBuffer& buffer,
                                   std::mt19937_64& rng, long j) {
  if (buffer.size() == 0) {
    throw std::logic_error("td3_iteration: empty buffer");
  }
  const auto& hp = agent.hp;
  const int batch = hp.batch;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(buffer.size()) - 1);
  std::vector<int> idx(static_cast<std::size_t>(batch));
  for (auto& i : idx) i = pick(rng);

  Eigen::MatrixXd vs, vs2;
  std::vector<int> off, off2;
  gather_sets(buffer.veh_s, buffer.off_s, idx, &vs, &off);
  gather_sets(buffer.veh_s2, buffer.off_s2, idx, &vs2, &off2);
  const Eigen::MatrixXd es = gather_rows(buffer.ego_s, idx);
  const Eigen::MatrixXd es2 = gather_rows(buffer.ego_s2, idx);
  const Eigen::MatrixXd a = gather_rows(buffer.actions, idx);
  Eigen::VectorXd r(batch), done(batch);
  for (int b = 0; b < batch; ++b) {
    r(b) = buffer.rewards(idx[static_cast<std::size_t>(b)]);
    done(b) = buffer.done(idx[static_cast<std::size_t>(b)]);
  }

  const int d_rho = agent.encoder.output_dim();
  const int d_state = agent.state_dim();

  // Target side: smoothed target actions and the min-over-critics target.
  Eigen::MatrixXd x2(batch, d_state);
  x2 << agent.encoder_target.encode_batch(vs2, off2), es2;
  Eigen::MatrixXd a_bar = agent.actor_target.forward(x2);
  std::normal_distribution<double> noise(0.0, hp.policy_noise);
  for (Eigen::Index rr = 0; rr < a_bar.rows(); ++rr) {
    for (Eigen::Index cc = 0; cc < a_bar.cols(); ++cc) {
      const double eps =
          std::clamp(noise(rng), -hp.noise_clip, hp.noise_clip);
      a_bar(rr, cc) = std::clamp(a_bar(rr, cc) + eps, -1.0, 1.0);
    }
  }
  Eigen::MatrixXd xa2(batch, d_state + kActionDim);
  xa2 << x2, a_bar;
  Eigen::VectorXd q_min;
  for (const auto& ct : agent.critic_targets) {
    const Eigen::VectorXd q = ct.forward(xa2).col(0);
    q_min = q_min.size() == 0 ? q : q_min.cwiseMin(q);
  }
  const Eigen::VectorXd y =
      r.array() + (1.0 - done.array()) * hp.gamma * q_min.array();

  // Live side: critics regressed to y; the encoder receives the summed
  // critic gradients.
  DeepSets::BatchCache enc_cache;
  const Eigen::MatrixXd pooled_out =
      agent.encoder.encode_batch(vs, off, &enc_cache);
  Eigen::MatrixXd x(batch, d_state);
  x << pooled_out, es;
  Eigen::MatrixXd xa(batch, d_state + kActionDim);
  xa << x, a;

  IterationDiagnostics diag;
  diag.mean_target = y.mean();
  Eigen::MatrixXd d_enc_out = Eigen::MatrixXd::Zero(batch, d_rho);
  for (std::size_t ci = 0; ci < agent.critics.size(); ++ci) {
    DenseNet::Cache cache;
    const Eigen::VectorXd q = agent.critics[ci].forward(xa, &cache).col(0);
    const Eigen::VectorXd diff = q - y;
    diag.critic_loss += diff.squaredNorm() / batch;
    diag.mean_q += q.mean() / static_cast<double>(agent.critics.size());
    const Eigen::MatrixXd d_q = (2.0 / batch) * diff;
    DenseNet::Grads grads;
    grads.setZero(agent.critics[ci]);
    const Eigen::MatrixXd d_xa = agent.critics[ci].backward(cache, d_q, &grads);
    d_enc_out += d_xa.leftCols(d_rho);
    adam_update(agent.critics[ci], grads, agent.critic_opt[ci], hp.lr);
  }
  DenseNet::Grads phi_grads, rho_grads;
  phi_grads.setZero(agent.encoder.phi);
  rho_grads.setZero(agent.encoder.rho);
  agent.encoder.backward_batch(enc_cache, d_enc_out, &phi_grads, &rho_grads);
  adam_update(agent.encoder.phi, phi_grads, agent.phi_opt, hp.lr);
  adam_update(agent.encoder.rho, rho_grads, agent.rho_opt, hp.lr);

  if (!std::isfinite(diag.critic_loss)) {
    throw std::runtime_error("td3_iteration: non-finite critic loss");
  }

  // Delayed actor update and Polyak averaging. The actor treats the encoding
  // as a fixed input (stop-gradient).
  if (j % hp.policy_delay == 0) {
    diag.actor_updated = true;
    DenseNet::Cache actor_cache;
    const Eigen::MatrixXd a_pi = agent.actor.forward(x, &actor_cache);
    Eigen::MatrixXd xa_pi(batch, d_state + kActionDim);
    xa_pi << x, a_pi;
    DenseNet::Cache c1_cache;
    agent.critics[0].forward(xa_pi, &c1_cache);
    const Eigen::MatrixXd d_q1 =
        Eigen::MatrixXd::Constant(batch, 1, -1.0 / batch);
    const Eigen::MatrixXd d_xa_pi =
        agent.critics[0].backward(c1_cache, d_q1, nullptr);
    DenseNet::Grads actor_grads;
    actor_grads.setZero(agent.actor);
    agent.actor.backward(actor_cache, d_xa_pi.rightCols(kActionDim),
                         &actor_grads);
    adam_update(agent.actor, actor_grads, agent.actor_opt, hp.lr);

    polyak_update(agent.encoder_target.phi, agent.encoder.phi, hp.tau);
    polyak_update(agent.encoder_target.rho, agent.encoder.rho, hp.tau);
    polyak_update(agent.actor_target, agent.actor, hp.tau);
    for (std::size_t ci = 0; ci < agent.critics.size(); ++ci) {
      polyak_update(agent.critic_targets[ci], agent.critics[ci], hp.tau);
    }
  }
  return diag;
}

TrainedAgent train_offline(const std::vector<Transition>& transitions,
                           const TD3Hyperparams& hp, const NetSizes& sizes,
                           std::uint64_t seed,
                           const std::optional<std::string>& checkpoint_dir,
                           const TrainCallback& callback,
                           const FeatureNorm& norm,
                           const ActionBounds& bounds) {
  if (transitions.size() < static_cast<std::size_t>(hp.batch)) {
    throw std::invalid_argument("train_offline: buffer smaller than a batch");
  }
  ReplayBuffer buffer(transitions, norm);
  TrainedAgent agent = TrainedAgent::make(hp, sizes, norm, bounds, seed);
  agent.data_checksum = buffer_checksum(transitions);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  for (long j = 1; j <= hp.max_iterations; ++j) {
    const auto diag = td3_iteration(agent, buffer, rng, j);
    agent.iteration = j;
    if (callback) callback(j, diag);
    if (checkpoint_dir && hp.checkpoint_every > 0 &&
        j % hp.checkpoint_every == 0) {
      std::filesystem::create_directories(*checkpoint_dir);
      save_agent(agent, *checkpoint_dir + "/checkpoint_" + std::to_string(j) +
                            ".json");
    }
  }
  return agent;
}

namespace {

using json = nlohmann::ordered_json;

const char* act_name(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::TanH:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "identity";
}

Activation act_from_name(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::TanH;
  if (s == "identity") return Activation::Identity;
  throw std::runtime_error("unknown activation: " + s);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c];
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i];
  return v;
}

json net_to_json(const DenseNet& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) {
    layers.push_back({{"act", act_name(layer.act)},
                      {"W", matrix_to_json(layer.W)},
                      {"b", vector_to_json(layer.b)}});
  }
  return layers;
}

DenseNet net_from_json(const json& j) {
  DenseNet net;
  for (const auto& jl : j) {
    DenseNet::Layer layer;
    layer.act = act_from_name(jl.at("act"));
    layer.W = matrix_from_json(jl.at("W"));
    layer.b = vector_from_json(jl.at("b"));
    net.layers.push_back(std::move(layer));
  }
  return net;
}

json adam_to_json(const AdamState& s) {
  json j;
  j["step"] = s.step;
  j["mW"] = json::array();
  j["vW"] = json::array();
  j["mb"] = json::array();
  j["vb"] = json::array();
  for (const auto& m : s.mW) j["mW"].push_back(matrix_to_json(m));
  for (const auto& m : s.vW) j["vW"].push_back(matrix_to_json(m));
  for (const auto& v : s.mb) j["mb"].push_back(vector_to_json(v));
  for (const auto& v : s.vb) j["vb"].push_back(vector_to_json(v));
  return j;
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.step = j.at("step");
  for (const auto& m : j.at("mW")) s.mW.push_back(matrix_from_json(m));
  for (const auto& m : j.at("vW")) s.vW.push_back(matrix_from_json(m));
  for (const auto& v : j.at("mb")) s.mb.push_back(vector_from_json(v));
  for (const auto& v : j.at("vb")) s.vb.push_back(vector_from_json(v));
  return s;
}

json bounds_to_json(const ActionBounds& b) {
  auto axis = [](const AxisBounds& a) { return json{a.lo, a.hi}; };
  return json{{"a_tv", axis(b.a_tv)},
              {"a_lon_d", axis(b.a_lon_d)},
              {"a_lat_d", axis(b.a_lat_d)},
              {"a_lp", axis(b.a_lp)}};
}

ActionBounds bounds_from_json(const json& j) {
  auto axis = [](const json& ja) { return AxisBounds{ja[0], ja[1]}; };
  ActionBounds b;
  b.a_tv = axis(j.at("a_tv"));
  b.a_lon_d = axis(j.at("a_lon_d"));
  b.a_lat_d = axis(j.at("a_lat_d"));
  b.a_lp = axis(j.at("a_lp"));
  return b;
}

}  // namespace

std::string agent_to_json(const TrainedAgent& a) {
  json j;
  j["format_version"] = 1;
  j["seed"] = a.seed;
  j["iteration"] = a.iteration;
  j["data_checksum"] = a.data_checksum;
  j["hyperparams"] = {{"gamma", a.hp.gamma},
                      {"tau", a.hp.tau},
                      {"batch", a.hp.batch},
                      {"lr", a.hp.lr},
                      {"policy_delay", a.hp.policy_delay},
                      {"policy_noise", a.hp.policy_noise},
                      {"noise_clip", a.hp.noise_clip},
                      {"max_iterations", a.hp.max_iterations},
                      {"n_critics", a.hp.n_critics},
                      {"checkpoint_every", a.hp.checkpoint_every}};
  j["sizes"] = {{"phi_hidden", a.sizes.encoder.phi_hidden},
                {"d_phi", a.sizes.encoder.d_phi},
                {"rho_hidden", a.sizes.encoder.rho_hidden},
                {"d_rho", a.sizes.encoder.d_rho},
                {"actor_hidden1", a.sizes.actor_hidden1},
                {"actor_hidden2", a.sizes.actor_hidden2},
                {"critic_hidden1", a.sizes.critic_hidden1},
                {"critic_hidden2", a.sizes.critic_hidden2}};
  j["norm"] = {{"radius", a.norm.radius},
               {"v_des", a.norm.v_des},
               {"road_width", a.norm.road_width},
               {"acc_scale", a.norm.acc_scale},
               {"lat_v_scale", a.norm.lat_v_scale},
               {"lane_scale", a.norm.lane_scale}};
  j["bounds"] = bounds_to_json(a.bounds);
  j["encoder"] = {{"phi", net_to_json(a.encoder.phi)},
                  {"rho", net_to_json(a.encoder.rho)}};
  j["encoder_target"] = {{"phi", net_to_json(a.encoder_target.phi)},
                         {"rho", net_to_json(a.encoder_target.rho)}};
  j["actor"] = net_to_json(a.actor);
  j["actor_target"] = net_to_json(a.actor_target);
  j["critics"] = json::array();
  j["critic_targets"] = json::array();
  for (const auto& c : a.critics) j["critics"].push_back(net_to_json(c));
  for (const auto& c : a.critic_targets) {
    j["critic_targets"].push_back(net_to_json(c));
  }
  j["opt"] = {{"phi", adam_to_json(a.phi_opt)},
              {"rho", adam_to_json(a.rho_opt)},
              {"actor", adam_to_json(a.actor_opt)}};
  j["opt"]["critics"] = json::array();
  for (const auto& o : a.critic_opt) j["opt"]["critics"].push_back(adam_to_json(o));
  return j.dump();
}

TrainedAgent agent_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format_version", 0) != 1) {
    throw std::runtime_error("agent checkpoint: unsupported format version");
  }
  TrainedAgent a;
  a.seed = j.at("seed");
  a.iteration = j.at("iteration");
  a.data_checksum = j.at("data_checksum");
  const auto& jh = j.at("hyperparams");
  a.hp.gamma = jh.at("gamma");
  a.hp.tau = jh.at("tau");
  a.hp.batch = jh.at("batch");
  a.hp.lr = jh.at("lr");
  a.hp.policy_delay = jh.at("policy_delay");
  a.hp.policy_noise = jh.at("policy_noise");
  a.hp.noise_clip = jh.at("noise_clip");
  a.hp.max_iterations = jh.at("max_iterations");
  a.hp.n_critics = jh.at("n_critics");
  a.hp.checkpoint_every = jh.at("checkpoint_every");
  const auto& js = j.at("sizes");
  a.sizes.encoder.phi_hidden = js.at("phi_hidden");
  a.sizes.encoder.d_phi = js.at("d_phi");
  a.sizes.encoder.rho_hidden = js.at("rho_hidden");
  a.sizes.encoder.d_rho = js.at("d_rho");
  a.sizes.actor_hidden1 = js.at("actor_hidden1");
  a.sizes.actor_hidden2 = js.at("actor_hidden2");
  a.sizes.critic_hidden1 = js.at("critic_hidden1");
  a.sizes.critic_hidden2 = js.at("critic_hidden2");
  const auto& jn = j.at("norm");
  a.norm.radius = jn.at("radius");
  a.norm.v_des = jn.at("v_des");
  a.norm.road_width = jn.at("road_width");
  a.norm.acc_scale = jn.at("acc_scale");
  a.norm.lat_v_scale = jn.at("lat_v_scale");
  a.norm.lane_scale = jn.at("lane_scale");
  a.bounds = bounds_from_json(j.at("bounds"));
  a.encoder.phi = net_from_json(j.at("encoder").at("phi"));
  a.encoder.rho = net_from_json(j.at("encoder").at("rho"));
  a.encoder_target.phi = net_from_json(j.at("encoder_target").at("phi"));
  a.encoder_target.rho = net_from_json(j.at("encoder_target").at("rho"));
  a.actor = net_from_json(j.at("actor"));
  a.actor_target = net_from_json(j.at("actor_target"));
  for (const auto& jc : j.at("critics")) a.critics.push_back(net_from_json(jc));
  for (const auto& jc : j.at("critic_targets")) {
    a.critic_targets.push_back(net_from_json(jc));
  }
  a.phi_opt = adam_from_json(j.at("opt").at("phi"));
  a.rho_opt = adam_from_json(j.at("opt").at("rho"));
  a.actor_opt = adam_from_json(j.at("opt").at("actor"));
  for (const auto& jo : j.at("opt").at("critics")) {
    a.critic_opt.push_back(adam_from_json(jo));
  }
  if (a.critics.size() != a.critic_targets.size() ||
      a.critics.size() != a.critic_opt.size()) {
    throw std::runtime_error("agent checkpoint: inconsistent critic count");
  }
  return a;
}

void save_agent(const TrainedAgent& agent, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << agent_to_json(agent) << '\n';
}

TrainedAgent load_agent(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return agent_from_json(text);
}

}  // namespace otpl
