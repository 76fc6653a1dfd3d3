#pragma once

#include <map>
#include <string>

#include "fgac/model.hpp"
#include "fgac/ocl.hpp"

namespace fgac::ocl2sql {

enum class Origin { Manual, Generated };

struct SqlConstraintImpl {
  ocl::ExprPtr constraint;
  std::string sql;  // boolean SQL expression over parameters named after the keywords
  Origin origin = Origin::Generated;
};

/// Hand-written SQL implementations keyed by constraint shape: iterator
/// variables are alpha-renamed before lookup, so `l|l.age` and `x|x.age`
/// share an entry.
class Registry {
 public:
  /// Throws SyntaxError if `constraint` does not parse.
  void add(const std::string& constraint, std::string sql);
  const std::string* find(const ocl::Expr& constraint) const;
  std::size_t size() const { return entries_.size(); }

  static std::string key(const ocl::ExprPtr& constraint);

 private:
  std::map<std::string, std::string> entries_;
};

/// Registry hit verbatim, else the fallback compiler. Throws Uncompilable.
SqlConstraintImpl map_ocl_to_sql(const ocl::ExprPtr& constraint, const DataModel& dm, const Registry& registry);

/// Naive compilation of a typed constraint into SQL over the schema of `dm`.
std::string compile_fallback(const ocl::Expr& constraint, const DataModel& dm);

}  // namespace fgac::ocl2sql
