// profiles.hpp - named experiment profiles
//
// "paper": the full-scale configuration (Table-1 channel parameters, 400+400
// epochs, 15k/5k/10k datasets, default architecture). Expensive; intended
// for long runs.
// "desk": a reduced instance (M=16, M'=24, N=10, P=4) with a proportionally
// scaled Doppler bound and a slimmer network, sized so the whole pipeline
// runs in minutes on one core.

#pragma once

#include <string>

#include "uwamod/config.hpp"
#include "uwamod/net/model.hpp"
#include "uwamod/training.hpp"

namespace uwamod {

struct Profile {
    std::string name;
    SystemConfig config;
    TrainingPlan plan;
    ArchConfig arch;
};

inline Profile paper_profile() {
    Profile p;
    p.name = "paper";
    p.config = paper_config();
    p.plan = TrainingPlan{};
    p.arch = ArchConfig{};
    return p;
}

inline Profile desk_profile() {
    Profile p;
    p.name = "desk";
    p.config = desk_config();
    p.plan.e1 = 50;
    p.plan.e2 = 50;
    p.plan.batch_size = 20;
    p.plan.n_train = 500;
    p.plan.n_val = 100;
    p.plan.n_test = 200;
    p.arch.pathway_channels = 4;
    p.arch.fused_channels = 4;
    p.arch.pool_grid = 8;
    p.arch.fc_hidden1 = 128;
    p.arch.fc_hidden2 = 128;
    return p;
}

inline Profile profile_by_name(const std::string& name) {
    if (name == "paper") return paper_profile();
    if (name == "desk") return desk_profile();
    throw Error("unknown profile '" + name + "' (expected 'desk' or 'paper')");
}

}  // namespace uwamod
