#include "bcr/bcr.h"

#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "core/bandit.hpp"
#include "core/errors.hpp"
#include "core/gittins.hpp"
#include "core/gridworld.hpp"
#include "core/harness.hpp"
#include "core/rng.hpp"

namespace {

thread_local std::string g_last_error;

bcr_code fail(bcr_code code, const std::string& message) {
    g_last_error = message;
    return code;
}

// Run `fn` and translate exceptions into status codes.
template <typename Fn>
bcr_code guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return BCR_OK;
    } catch (const bcr::MapParseError& e) {
        return fail(BCR_ERR_PARSE, e.what());
    } catch (const bcr::ConfigError& e) {
        return fail(BCR_ERR_INVALID_ARGUMENT, e.what());
    } catch (const bcr::IoError& e) {
        return fail(BCR_ERR_IO, e.what());
    } catch (const bcr::ModelClassExhausted& e) {
        return fail(BCR_ERR_MODEL_CLASS_EXHAUSTED, e.what());
    } catch (const bcr::InvalidArgument& e) {
        return fail(BCR_ERR_INVALID_ARGUMENT, e.what());
    } catch (const nlohmann::json::parse_error& e) {
        return fail(BCR_ERR_PARSE, e.what());
    } catch (const std::exception& e) {
        return fail(BCR_ERR_RUNTIME, e.what());
    }
}

char* copy_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out == nullptr) {
        return nullptr;
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

nlohmann::json parse_json_text(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') {
        return nlohmann::json::object();
    }
    nlohmann::json j = nlohmann::json::parse(text);  // throws parse_error
    if (!j.is_object()) {
        throw bcr::ConfigError(std::string(what) + " must be a JSON object");
    }
    return j;
}

}  // namespace

struct bcr_experiment {
    std::string kind;
    nlohmann::json config;
    std::optional<bcr::ExperimentArtifacts> result;
};

struct bcr_bandit_agent {
    std::string policy;
    bcr::BanditStats stats;
    bcr::Rng rng;
    long long pulls = 0;
    double epsilon = 0.1;
    double epsilon_decay = 0.99;
    std::shared_ptr<bcr::GittinsTable> table;

    bcr_bandit_agent(int levers, std::uint64_t seed)
        : stats(levers), rng(bcr::make_rng(seed)) {}
};

struct bcr_gittins_table {
    bcr::GittinsTable table;

    explicit bcr_gittins_table(bcr::GittinsTable t) : table(std::move(t)) {}
};

struct bcr_gridworld {
    bcr::Rng rng;
    bcr::GridworldSim sim;

    bcr_gridworld(const bcr::GridMap& map, std::uint64_t seed)
        : rng(bcr::make_rng(seed)), sim(map, rng) {}
};

extern "C" {

const char* bcr_version(void) { return "0.1.0"; }

const char* bcr_last_error(void) { return g_last_error.c_str(); }

void bcr_string_free(char* s) { delete[] s; }

/* --- experiments -------------------------------------------------------- */

bcr_code bcr_experiment_create(const char* kind, const char* config_json,
                               bcr_experiment** out) {
    if (out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "out pointer is null");
    }
    *out = nullptr;
    if (kind == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "experiment kind is null");
    }
    return guarded([&] {
        auto handle = std::make_unique<bcr_experiment>();
        handle->kind = kind;
        handle->config = parse_json_text(config_json, "experiment config");
        // Validate eagerly so configuration mistakes surface at create time.
        if (handle->kind == "bandit") {
            bcr::parse_bandit_config(handle->config);
        } else if (handle->kind == "gridworld") {
            bcr::parse_gridworld_config(handle->config);
        } else if (handle->kind == "exp_gap") {
            bcr::parse_exp_gap_config(handle->config);
        } else if (handle->kind == "converge") {
            bcr::parse_converge_config(handle->config);
        } else {
            throw bcr::ConfigError("unknown experiment kind '" + handle->kind + "'");
        }
        *out = handle.release();
    });
}

bcr_code bcr_experiment_run(bcr_experiment* experiment) {
    if (experiment == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "experiment handle is null");
    }
    return guarded([&] {
        experiment->result = bcr::run_experiment(experiment->kind, experiment->config);
    });
}

char* bcr_experiment_summary_json(bcr_experiment* experiment) {
    if (experiment == nullptr) {
        fail(BCR_ERR_INVALID_ARGUMENT, "experiment handle is null");
        return nullptr;
    }
    if (!experiment->result.has_value()) {
        fail(BCR_ERR_INVALID_ARGUMENT, "experiment has not been run");
        return nullptr;
    }
    return copy_string(experiment->result->summary.dump(2));
}

char* bcr_experiment_metrics_csv(bcr_experiment* experiment) {
    if (experiment == nullptr) {
        fail(BCR_ERR_INVALID_ARGUMENT, "experiment handle is null");
        return nullptr;
    }
    if (!experiment->result.has_value()) {
        fail(BCR_ERR_INVALID_ARGUMENT, "experiment has not been run");
        return nullptr;
    }
    return copy_string(bcr::format_csv(experiment->result->rows));
}

void bcr_experiment_destroy(bcr_experiment* experiment) { delete experiment; }

/* --- bandit agent ------------------------------------------------------- */

bcr_code bcr_bandit_agent_create(const char* policy, int levers, uint64_t seed,
                                 const char* options_json, bcr_bandit_agent** out) {
    if (out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "out pointer is null");
    }
    *out = nullptr;
    if (policy == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "policy is null");
    }
    return guarded([&] {
        if (levers < 1) {
            throw bcr::InvalidArgument("levers must be >= 1");
        }
        const std::string policy_name = policy;
        if (policy_name != "bcr" && policy_name != "egreedy" &&
            policy_name != "gittins") {
            throw bcr::InvalidArgument("unknown bandit policy '" + policy_name + "'");
        }
        const nlohmann::json options = parse_json_text(options_json, "agent options");

        auto agent = std::make_unique<bcr_bandit_agent>(levers, seed);
        agent->policy = policy_name;
        agent->epsilon = options.value("epsilon", 0.1);
        agent->epsilon_decay = options.value("epsilon_decay", 0.99);
        if (policy_name == "gittins") {
            const int horizon = options.value("gittins_horizon", 1300);
            const double discount = options.value("gittins_discount", 0.999);
            const double tolerance = options.value("gittins_tolerance", 1e-4);
            const std::string cache_dir = options.value("gittins_cache_dir", "");
            agent->table = std::make_shared<bcr::GittinsTable>(
                bcr::GittinsTable::load_or_compute(horizon, discount, tolerance,
                                                   cache_dir));
        }
        *out = agent.release();
    });
}

bcr_code bcr_bandit_agent_act(bcr_bandit_agent* agent, int* lever_out) {
    if (agent == nullptr || lever_out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        if (agent->policy == "bcr") {
            *lever_out = bcr::thompson_act(agent->stats, agent->rng);
        } else if (agent->policy == "egreedy") {
            *lever_out = bcr::epsilon_greedy_act(agent->stats, agent->pulls,
                                                 agent->epsilon, agent->epsilon_decay,
                                                 agent->rng);
        } else {
            *lever_out = bcr::gittins_act(agent->stats, *agent->table, agent->rng);
        }
    });
}

bcr_code bcr_bandit_agent_update(bcr_bandit_agent* agent, int lever, int reward) {
    if (agent == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "agent handle is null");
    }
    return guarded([&] {
        agent->stats = bcr::bandit_update(std::move(agent->stats), lever, reward);
        agent->pulls += 1;
    });
}

void bcr_bandit_agent_destroy(bcr_bandit_agent* agent) { delete agent; }

/* --- Gittins table ------------------------------------------------------ */

bcr_code bcr_gittins_table_build(int horizon, double discount, double tolerance,
                                 const char* cache_dir, bcr_gittins_table** out) {
    if (out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "out pointer is null");
    }
    *out = nullptr;
    return guarded([&] {
        *out = new bcr_gittins_table(bcr::GittinsTable::load_or_compute(
            horizon, discount, tolerance, cache_dir == nullptr ? "" : cache_dir));
    });
}

bcr_code bcr_gittins_table_index(const bcr_gittins_table* table, int successes,
                                 int failures, double* index_out) {
    if (table == nullptr || index_out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] { *index_out = table->table.index(successes, failures); });
}

bcr_code bcr_gittins_table_save(const bcr_gittins_table* table, const char* path) {
    if (table == nullptr || path == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] { table->table.save(path); });
}

void bcr_gittins_table_destroy(bcr_gittins_table* table) { delete table; }

/* --- grid-world simulator ----------------------------------------------- */

bcr_code bcr_gridworld_create(const char* map_text, uint64_t seed,
                              bcr_gridworld** out) {
    if (out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "out pointer is null");
    }
    *out = nullptr;
    if (map_text == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "map text is null");
    }
    return guarded([&] {
        const bcr::GridMap map = bcr::parse_grid_map(map_text);
        *out = new bcr_gridworld(map, seed);
    });
}

bcr_code bcr_gridworld_size(const bcr_gridworld* sim, int* width_out,
                            int* height_out) {
    if (sim == nullptr || width_out == nullptr || height_out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    *width_out = sim->sim.map().width;
    *height_out = sim->sim.map().height;
    g_last_error.clear();
    return BCR_OK;
}

bcr_code bcr_gridworld_state(const bcr_gridworld* sim, int* cell_out) {
    if (sim == nullptr || cell_out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    *cell_out = sim->sim.state();
    g_last_error.clear();
    return BCR_OK;
}

bcr_code bcr_gridworld_step(bcr_gridworld* sim, int action, double* reward_out,
                            int* next_cell_out) {
    if (sim == nullptr || reward_out == nullptr || next_cell_out == nullptr) {
        return fail(BCR_ERR_INVALID_ARGUMENT, "null argument");
    }
    return guarded([&] {
        const bcr::GridTransition tr = sim->sim.step(action, sim->rng);
        *reward_out = tr.reward;
        *next_cell_out = tr.next;
    });
}

void bcr_gridworld_destroy(bcr_gridworld* sim) { delete sim; }

}  // extern "C"
