#include "hinet/sensors.hpp"

#include <cctype>

namespace hinet {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::pair<std::string, std::vector<std::string>> parse_sensor_ref(
    const std::string& ref) {
  auto open = ref.find('(');
  if (open == std::string::npos) return {trim(ref), {}};
  if (ref.back() != ')')
    raise(ErrorCode::ParseFailure, "malformed sensor reference '" + ref + "'");
  std::string base = trim(ref.substr(0, open));
  std::string inner = ref.substr(open + 1, ref.size() - open - 2);
  std::vector<std::string> args;
  if (!trim(inner).empty()) {
    std::size_t start = 0;
    while (true) {
      auto comma = inner.find(',', start);
      if (comma == std::string::npos) {
        args.push_back(trim(inner.substr(start)));
        break;
      }
      args.push_back(trim(inner.substr(start, comma - start)));
      start = comma + 1;
    }
  }
  return {base, args};
}

void SensorRegistry::add_property(const std::string& name,
                                  PropertySensor sensor) {
  resolved_[name] = Resolved{SensorMode::Property, std::move(sensor), {}, {}};
}

void SensorRegistry::add_matching(const std::string& name,
                                  MatchingSensor sensor) {
  resolved_[name] = Resolved{SensorMode::Matching, {}, std::move(sensor), {}};
}

void SensorRegistry::add_generating(const std::string& name,
                                    GeneratingSensor sensor) {
  resolved_[name] = Resolved{SensorMode::Generating, {}, {}, std::move(sensor)};
}

void SensorRegistry::add_property_factory(const std::string& base,
                                          PropertyFactory factory) {
  property_factories_[base] = std::move(factory);
}

void SensorRegistry::add_matching_factory(const std::string& base,
                                          MatchingFactory factory) {
  matching_factories_[base] = std::move(factory);
}

void SensorRegistry::add_generating_factory(const std::string& base,
                                            GeneratingFactory factory) {
  generating_factories_[base] = std::move(factory);
}

const SensorRegistry::Resolved* SensorRegistry::resolve(
    const std::string& ref) const {
  auto it = resolved_.find(ref);
  if (it != resolved_.end()) return &it->second;
  auto [base, args] = parse_sensor_ref(ref);
  if (auto f = property_factories_.find(base); f != property_factories_.end()) {
    Resolved r{SensorMode::Property, f->second(args), {}, {}};
    return &resolved_.emplace(ref, std::move(r)).first->second;
  }
  if (auto f = matching_factories_.find(base); f != matching_factories_.end()) {
    Resolved r{SensorMode::Matching, {}, f->second(args), {}};
    return &resolved_.emplace(ref, std::move(r)).first->second;
  }
  if (auto f = generating_factories_.find(base);
      f != generating_factories_.end()) {
    Resolved r{SensorMode::Generating, {}, {}, f->second(args)};
    return &resolved_.emplace(ref, std::move(r)).first->second;
  }
  return nullptr;
}

bool SensorRegistry::known(const std::string& ref) const {
  return resolve(ref) != nullptr;
}

SensorMode SensorRegistry::mode_of(const std::string& ref) const {
  const Resolved* r = resolve(ref);
  if (!r) raise(ErrorCode::UnknownSensor, "unknown sensor '" + ref + "'");
  return r->mode;
}

const PropertySensor& SensorRegistry::property(const std::string& ref) const {
  const Resolved* r = resolve(ref);
  if (!r) raise(ErrorCode::UnknownSensor, "unknown sensor '" + ref + "'");
  if (r->mode != SensorMode::Property)
    raise(ErrorCode::ModeMismatch, "'" + ref + "' is not a property sensor");
  return r->property;
}

const MatchingSensor& SensorRegistry::matching(const std::string& ref) const {
  const Resolved* r = resolve(ref);
  if (!r) raise(ErrorCode::UnknownSensor, "unknown sensor '" + ref + "'");
  if (r->mode != SensorMode::Matching)
    raise(ErrorCode::ModeMismatch, "'" + ref + "' is not a matching sensor");
  return r->matching;
}

const GeneratingSensor& SensorRegistry::generating(
    const std::string& ref) const {
  const Resolved* r = resolve(ref);
  if (!r) raise(ErrorCode::UnknownSensor, "unknown sensor '" + ref + "'");
  if (r->mode != SensorMode::Generating)
    raise(ErrorCode::ModeMismatch, "'" + ref + "' is not a generating sensor");
  return r->generating;
}

namespace {

void require_arity(const std::string& base, const std::vector<std::string>& args,
                   std::size_t n) {
  if (args.size() != n)
    raise(ErrorCode::SignatureMismatch,
          base + " expects " + std::to_string(n) + " argument(s), got " +
              std::to_string(args.size()));
}

}  // namespace

SensorRegistry builtin_sensors() {
  SensorRegistry reg;

  reg.add_property_factory(
      "attr", [](const std::vector<std::string>& args) -> PropertySensor {
        require_arity("attr", args, 1);
        std::string name = args[0];
        return PropertySensor{
            std::nullopt,
            [name](const InstanceGraph&, const NodeInstance& x) -> Value {
              const Value* v = x.attr(name);
              if (!v)
                raise(ErrorCode::SensorFailure,
                      "instance '" + x.id + "' has no attribute '" + name + "'");
              return *v;
            }};
      });

  reg.add_property_factory(
      "const_list", [](const std::vector<std::string>& args) -> PropertySensor {
        std::vector<Value> items;
        items.reserve(args.size());
        for (const std::string& a : args) items.push_back(Value::text(a));
        Value fixed = Value::list(ValueKind::Text, std::move(items));
        return PropertySensor{ValueKind::List,
                              [fixed](const InstanceGraph&,
                                      const NodeInstance&) { return fixed; }};
      });

  reg.add_matching_factory(
      "key_eq", [](const std::vector<std::string>& args) -> MatchingSensor {
        require_arity("key_eq", args, 2);
        std::string a = args[0], b = args[1];
        return MatchingSensor{
            [a, b](const NodeInstance& src, const NodeInstance& dst) {
              const Value* va = src.attr(a);
              const Value* vb = dst.attr(b);
              return va && vb && va->equals(*vb);
            },
            std::make_pair(a, b)};
      });

  reg.add_generating_factory(
      "tokenize_ws",
      [](const std::vector<std::string>& args) -> GeneratingSensor {
        require_arity("tokenize_ws", args, 1);
        std::string attr_name = args[0];
        return GeneratingSensor{[attr_name](const NodeInstance& src) {
          const Value* v = src.attr(attr_name);
          if (!v)
            raise(ErrorCode::SensorFailure, "instance '" + src.id +
                                                "' has no attribute '" +
                                                attr_name + "'");
          const std::string& text = v->as_text();
          std::vector<GeneratedInstance> out;
          std::size_t i = 0;
          std::int64_t position = 0;
          while (i < text.size()) {
            while (i < text.size() &&
                   std::isspace(static_cast<unsigned char>(text[i])))
              ++i;
            std::size_t start = i;
            while (i < text.size() &&
                   !std::isspace(static_cast<unsigned char>(text[i])))
              ++i;
            if (i > start) {
              GeneratedInstance tok;
              tok.id = src.id + ".tok" + std::to_string(position);
              tok.attrs.emplace("text",
                                Value::text(text.substr(start, i - start)));
              tok.attrs.emplace("position", Value::integer(position));
              out.push_back(std::move(tok));
              ++position;
            }
          }
          return out;
        }};
      });

  return reg;
}

}  // namespace hinet
