#pragma once

#include <vector>

namespace cstrack::netsim {

/// Scalars broadcast by one agent during one time step, split by purpose,
/// plus the number of delay slots the step consumed.
struct StepLedger {
  long long consensus = 0;       // N^C: averaging + max-consensus coefficients
  long long beliefs = 0;         // N^NBP: neighbor belief particles
  long long alt_proposal = 0;    // N^AP: proposal dissemination
  long long ldt_handover = 0;    // LDT belief handover payloads
  int delay_slots = 0;

  long long total() const { return consensus + beliefs + alt_proposal + ldt_handover; }

  void operator+=(const StepLedger& o) {
    consensus += o.consensus;
    beliefs += o.beliefs;
    alt_proposal += o.alt_proposal;
    ldt_handover += o.ldt_handover;
    delay_slots += o.delay_slots;
  }
};

/// Closed-form per-agent broadcast counts for one time step.
struct LedgerFormulas {
  static long long consensus(int P, int C, int I, long long J, int num_objects) {
    return static_cast<long long>(P) * (C + I) * J * num_objects;
  }
  static long long beliefs(int P, long long J, int L) {
    return static_cast<long long>(P) * J * L;
  }
  static long long alt_proposal(int P, long long J, int L, int I, int num_objects) {
    return static_cast<long long>(P) * J * L * I * num_objects;
  }
};

/// Delay in slots for one time step: P(C+I), or P(C+2I) with the alternative
/// proposal; P belief-broadcast slots when there is nothing to track.
inline int compute_delay(int P, int C, int I, int num_objects, bool alt_proposal) {
  if (num_objects == 0) return P;
  return P * (C + I) + (alt_proposal ? P * I : 0);
}

}  // namespace cstrack::netsim
