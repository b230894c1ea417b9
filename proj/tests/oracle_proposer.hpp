#pragma once

#include <string>
#include <utility>

#include "cascade_forge/proposers.hpp"

namespace oracle {

/// Knows the ground-truth cascade. For the current forms it finds the
/// largest j such that gt[j..] maps them onto the targets and offers gt[j].
class CascadeOracleProposer final : public cascade_forge::Proposer {
 public:
  CascadeOracleProposer(cascade_forge::Cascade truth, const cascade_forge::Inventory& inventory)
      : truth_(std::move(truth)), inventory_(&inventory) {}

  cascade_forge::Proposal propose(const cascade_forge::ProposalRequest& request) override {
    using namespace cascade_forge;
    Proposal out;
    for (std::size_t j = truth_.size(); j-- > 0;) {
      const Cascade rest(truth_.begin() + static_cast<std::ptrdiff_t>(j), truth_.end());
      bool reproduces = true;
      for (const auto& ex : request.examples) {
        if (run_cascade(rest, ex.source, *inventory_) != ex.target) {
          reproduces = false;
          break;
        }
      }
      if (reproduces) {
        out.rules.push_back(truth_[j]);
        break;
      }
    }
    ++calls;
    return out;
  }
  std::string name() const override { return "oracle"; }

  std::size_t calls = 0;

 private:
  cascade_forge::Cascade truth_;
  const cascade_forge::Inventory* inventory_;
};

}  // namespace oracle
