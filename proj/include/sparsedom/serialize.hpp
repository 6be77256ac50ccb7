#pragma once

// JSON forms of the library types. Rationals are "num/den" strings, doubles
// are written in shortest round-trip form.

#include "sparsedom/czo.hpp"
#include "sparsedom/sparse.hpp"
#include "sparsedom/weights.hpp"

#include "json.hpp"

namespace sparsedom {

using Json = nlohmann::ordered_json;

Json to_json(Rational const& q);
Rational rational_from_json(Json const& j);
Json to_json(GridId const& g);
Json to_json(Cube const& c);
Cube cube_from_json(Json const& j);
Json to_json(Box const& b);
Json to_json(Mesh const& m);
Json to_json(StepFunction const& f);
StepFunction step_function_from_json(Json const& j);

Json to_json(SparseFamily const& s);
SparseFamily family_from_json(Json const& j);
Json to_json(FamilyCheck const& c);
Json to_json(DecompositionResult const& d);
Json to_json(BoundCheck const& b);
Json to_json(OscillationReport const& r);
Json to_json(DominationReport const& r);
Json to_json(A2Report const& r);
Json to_json(NormEstimate const& e);
Json to_json(ScanTable const& t);

} // namespace sparsedom
