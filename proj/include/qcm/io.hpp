#pragma once

#include <string>

#include "json.hpp"
#include "qcm/circuits.hpp"
#include "qcm/classical.hpp"
#include "qcm/dag.hpp"
#include "qcm/quantum.hpp"
#include "qcm/splitnode.hpp"

namespace qcm::io {

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json load_file(const std::string& path);
void save_file(const std::string& path, const Json& j);

// Complex matrices are flat row-major lists of [re, im] pairs.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& where);

// {"wires":[{"node","port","dim"}], "matrix":[...]}; wires must already be in
// canonical order or the loader rejects.
Json operator_to_json(const LabeledOperator& op);
LabeledOperator operator_from_json(const Json& j, const std::string& where = "operator");

// {"nodes":[{"name","dim"}], "edges":[["a","b"],...]}
Json dag_to_json(const Dag& g, const std::map<std::string, int>& dims = {});
Dag dag_from_json(const Json& j, std::map<std::string, int>* dims = nullptr,
                  const std::string& where = "dag");

Json digraph_to_json(const Digraph& g);

// {"graph": <dag>, "cards": {...}, "cpts":[{"child","parents","table"}]}
Json ccm_to_json(const Ccm& m);
Ccm ccm_from_json(const Json& j, const std::string& where = "ccm");

// {"nodes":[{"name","card"}], "tensor":[...]}
Json cpm_to_json(const Cpm& k);
Cpm cpm_from_json(const Json& j, const std::string& where = "cpm");

// operator file plus {"nodes":[{"name","dim"}]}
Json process_to_json(const ProcessOperator& sigma);
ProcessOperator process_from_json(const Json& j, const std::string& where = "process");

// {"variables":[{"name","card"}], "probs":[...]}
Json dist_to_json(const Dist& d);
Dist dist_from_json(const Json& j, const std::string& where = "dist");

// {"gates":[{"unitary","in","out"}], "broken":[...], "inputs":{...}, "traced":[...]}
// with wire refs {"label","dim"} or {"node","port","dim"}.
Json circuit_to_json(const BrokenCircuit& c);
BrokenCircuit circuit_from_json(const Json& j, const std::string& where = "circuit");

// {"graph": <dag>, "channels":[{"node", "operator": <operator>}]}
Json qcm_to_json(const Qcm& m);
Qcm qcm_from_json(const Json& j, const std::string& where = "qcm");

}  // namespace qcm::io
