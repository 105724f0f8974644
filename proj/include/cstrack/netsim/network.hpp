#pragma once

#include <map>
#include <vector>

#include "cstrack/consensus.hpp"
#include "cstrack/netsim/agent.hpp"
#include "cstrack/netsim/ledger.hpp"
#include "cstrack/topology.hpp"

namespace cstrack::netsim {

/// Delivers one agent's broadcast to its communication neighbors and charges
/// the given scalar count. All agents transmit in parallel within a slot, so
/// the caller groups deliveries slot by slot.
template <class Payload>
void broadcast(const TopologySnapshot& topo, int sender, const Payload& payload,
               long long scalars, long long& charge_counter,
               std::vector<std::vector<Payload>>& inboxes) {
  charge_counter += scalars;
  for (int nbr : topo.comm[sender]) inboxes[nbr].push_back(payload);
}

/// Per-step record of one agent's inbound traffic; replaying it through a
/// fresh agent must reproduce the original outputs bitwise (isolation audit).
struct StepRecording {
  StepInputs inputs;
  struct IterationIO {
    std::vector<BeliefPayload> beliefs;
    std::vector<std::vector<MinPayload>> min_slots;
    std::vector<std::vector<AvgPayload>> avg_slots;
    std::vector<std::vector<MaxPayload>> max_slots;
  };
  std::vector<IterationIO> iterations;
  std::vector<HandoverPayload> handover;
};

struct TimeStepResult {
  std::vector<StepOutputs> outputs;   // per agent
  std::vector<StepLedger> ledgers;    // per agent
  int delay_slots = 0;
  int diameter = 0;
};

struct NetworkParams {
  int C = 6;
  bool ldt = false;
};

/// Slot-synchronous driver. Agents are isolated state machines; every
/// cross-agent value flows through the broadcast inboxes assembled here.
class SlottedNetwork {
 public:
  SlottedNetwork(std::vector<AgentConfig> cfgs, NetworkParams params)
      : params_(params) {
    agents_.reserve(cfgs.size());
    for (auto& c : cfgs) agents_.emplace_back(std::move(c));
  }

  std::vector<SimAgent>& agents() { return agents_; }
  const std::vector<SimAgent>& agents() const { return agents_; }

  void record_agent(int id) { record_for_ = id; }
  const std::vector<StepRecording>& recordings() const { return recordings_; }

  TimeStepResult run_time_step(const TopologySnapshot& topo,
                               const std::vector<std::map<int, double>>& measurements,
                               int time, bool alt_proposal) {
    const int A = static_cast<int>(agents_.size());
    const int I = topo.diameter;
    if (!topo.connected)
      throw CommGraphDisconnected("run_time_step: communication graph disconnected");

    TimeStepResult result;
    result.diameter = I;
    result.ledgers.assign(A, StepLedger{});
    StepRecording rec;

    // Per-agent local inputs.
    std::vector<StepInputs> inputs(A);
    std::map<int, LdtInfo> ldt_base;
    std::map<int, std::vector<int>> ldt_participants;
    if (params_.ldt) prepare_ldt(topo, ldt_base, ldt_participants);
    for (int l = 0; l < A; ++l) {
      StepInputs& in = inputs[l];
      in.time = time;
      in.comm_neighbors = topo.comm[l];
      in.measured_agents = topo.meas_agents[l];
      in.measured_objects = topo.meas_objects[l];
      in.y = measurements[l];
      in.num_agents = A;
      in.diameter = I;
      in.consensus_iterations = params_.C;
      in.alt_proposal = alt_proposal;
      in.ldt = params_.ldt;
      if (params_.ldt) {
        for (const auto& [m, info] : ldt_base) {
          LdtInfo mine = info;
          const auto& parts = ldt_participants[m];
          mine.participate =
              std::binary_search(parts.begin(), parts.end(), l);
          if (mine.participate) {
            int deg = 0;
            for (int nbr : topo.comm[l])
              if (std::binary_search(parts.begin(), parts.end(), nbr)) ++deg;
            mine.my_degree = deg;
          }
          in.ldt_info[m] = mine;
        }
      }
      agents_[l].begin_step(in);
    }
    if (record_for_ >= 0) rec.inputs = inputs[record_for_];

    const int P = agents_[0].config().P;
    const int L = agents_[0].config().space.pos_dim;
    const long long J = agents_[0].config().J;
    int max_obj_count = 0;
    for (const auto& a : agents_) max_obj_count = std::max(max_obj_count, a.active_object_count());
    const bool any_consensus = max_obj_count > 0;
    int ldt_max_diam = 0;
    if (params_.ldt)
      for (const auto& [m, info] : ldt_base) ldt_max_diam = std::max(ldt_max_diam, info.diameter);
    const int max_rounds = params_.ldt ? ldt_max_diam : I;

    for (int p = 1; p <= P; ++p) {
      StepRecording::IterationIO io;
      bool belief_sent = false;

      auto attach_belief = [&](std::vector<std::vector<BeliefPayload>>& boxes) {
        std::vector<BeliefPayload> outs(A);
        for (int l = 0; l < A; ++l) outs[l] = agents_[l].emit_belief();
        boxes.assign(A, {});
        for (int l = 0; l < A; ++l)
          broadcast(topo, l, outs[l], J * L, result.ledgers[l].beliefs, boxes);
        belief_sent = true;
      };

      if (alt_proposal && any_consensus) {
        for (auto& a : agents_) a.prepare_alt_proposal();
        for (int it = 0; it < max_rounds; ++it) {
          std::vector<std::vector<MinPayload>> boxes(A);
          std::vector<MinPayload> outs(A);
          for (int l = 0; l < A; ++l) outs[l] = agents_[l].emit_min();
          for (int l = 0; l < A; ++l) {
            broadcast(topo, l, outs[l],
                      J * L * agents_[l].active_object_count(),
                      result.ledgers[l].alt_proposal, boxes);
            result.ledgers[l].delay_slots += 1;
          }
          if (!belief_sent) {
            std::vector<std::vector<BeliefPayload>> bboxes;
            attach_belief(bboxes);
            for (int l = 0; l < A; ++l) agents_[l].receive_beliefs(bboxes[l]);
            if (record_for_ >= 0) io.beliefs = bboxes[record_for_];
          }
          for (int l = 0; l < A; ++l) agents_[l].receive_min(boxes[l]);
          if (record_for_ >= 0) io.min_slots.push_back(boxes[record_for_]);
        }
        for (auto& a : agents_) {
          a.finish_min();
          a.update_own_from_beliefs();
          a.ap_consensus_init();
        }
      } else if (any_consensus) {
        for (auto& a : agents_) a.init_consensus();
      }

      for (int it = 0; it < (any_consensus ? params_.C : 0); ++it) {
        std::vector<std::vector<AvgPayload>> boxes(A);
        std::vector<AvgPayload> outs(A);
        for (int l = 0; l < A; ++l) outs[l] = agents_[l].emit_avg();
        for (int l = 0; l < A; ++l) {
          broadcast(topo, l, outs[l], J * agents_[l].active_object_count(),
                    result.ledgers[l].consensus, boxes);
          result.ledgers[l].delay_slots += 1;
        }
        if (!belief_sent) {
          std::vector<std::vector<BeliefPayload>> bboxes;
          attach_belief(bboxes);
          for (int l = 0; l < A; ++l) agents_[l].receive_beliefs(bboxes[l]);
          if (record_for_ >= 0) io.beliefs = bboxes[record_for_];
        }
        for (int l = 0; l < A; ++l) agents_[l].receive_avg(boxes[l]);
        if (record_for_ >= 0) io.avg_slots.push_back(boxes[record_for_]);
      }

      if (any_consensus) {
        for (auto& a : agents_) a.begin_max();
        for (int it = 0; it < max_rounds; ++it) {
          std::vector<std::vector<MaxPayload>> boxes(A);
          std::vector<MaxPayload> outs(A);
          for (int l = 0; l < A; ++l) outs[l] = agents_[l].emit_max();
          for (int l = 0; l < A; ++l) {
            broadcast(topo, l, outs[l], J * agents_[l].active_object_count(),
                      result.ledgers[l].consensus, boxes);
            result.ledgers[l].delay_slots += 1;
          }
          if (!belief_sent) {
            std::vector<std::vector<BeliefPayload>> bboxes;
            attach_belief(bboxes);
            for (int l = 0; l < A; ++l) agents_[l].receive_beliefs(bboxes[l]);
            if (record_for_ >= 0) io.beliefs = bboxes[record_for_];
          }
          for (int l = 0; l < A; ++l) agents_[l].receive_max(boxes[l]);
          if (record_for_ >= 0) io.max_slots.push_back(boxes[record_for_]);
        }
      }

      if (!belief_sent) {
        // nothing to track: the belief broadcast takes its own slot
        std::vector<std::vector<BeliefPayload>> bboxes;
        attach_belief(bboxes);
        for (int l = 0; l < A; ++l) {
          result.ledgers[l].delay_slots += 1;
          agents_[l].receive_beliefs(bboxes[l]);
        }
        if (record_for_ >= 0) io.beliefs = bboxes[record_for_];
      }

      for (auto& a : agents_) a.finish_iteration();
      if (record_for_ >= 0) rec.iterations.push_back(std::move(io));
    }

    if (params_.ldt && any_consensus) {
      // handover: participants broadcast the finished object beliefs
      std::vector<std::vector<HandoverPayload>> boxes(A);
      std::vector<HandoverPayload> outs(A);
      for (int l = 0; l < A; ++l) outs[l] = agents_[l].emit_handover();
      for (int l = 0; l < A; ++l) {
        broadcast(topo, l, outs[l],
                  J * L * agents_[l].active_object_count(),
                  result.ledgers[l].ldt_handover, boxes);
        result.ledgers[l].delay_slots += 1;
      }
      for (int l = 0; l < A; ++l) agents_[l].receive_handover(boxes[l]);
      if (record_for_ >= 0) rec.handover = boxes[record_for_];
    }

    result.outputs.reserve(A);
    for (auto& a : agents_) result.outputs.push_back(a.finish_step());
    result.delay_slots = result.ledgers.empty() ? 0 : result.ledgers[0].delay_slots;
    if (record_for_ >= 0) recordings_.push_back(std::move(rec));
    return result;
  }

 private:
  void prepare_ldt(const TopologySnapshot& topo, std::map<int, LdtInfo>& base,
                   std::map<int, std::vector<int>>& participants) {
    Graph g = comm_graph(topo);
    for (const auto& [m, obs] : topo.observers) {
      std::vector<int> parts;
      for (int l : obs) {
        const auto held = agents_[l].held_objects();
        if (std::binary_search(held.begin(), held.end(), m)) parts.push_back(l);
      }
      std::sort(parts.begin(), parts.end());
      LdtInfo info;
      info.multiplier = static_cast<int>(obs.size());
      if (!parts.empty()) {
        Graph sub = g.induced(parts);
        if (!sub.is_connected())
          throw LdtSubgraphDisconnected("run_time_step: LDT observer subnetwork of object " +
                                        std::to_string(m) + " disconnected");
        info.diameter = sub.diameter();
        info.participate = true;  // refined per agent above
      }
      base[m] = info;
      participants[m] = parts;
    }
  }

  NetworkParams params_;
  std::vector<SimAgent> agents_;
  int record_for_ = -1;
  std::vector<StepRecording> recordings_;
};

}  // namespace cstrack::netsim
