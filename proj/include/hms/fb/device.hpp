#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hms/fb/resource.hpp"
#include "hms/msg/channel.hpp"
#include "hms/proto/message.hpp"

namespace hms::msg {
class Bus;
}

namespace hms::fb {

/// Management request as carried on a device's management channel:
///
///   <Request ID="7" Action="CREATE|DELETE" Resource="Orders" [Reply="ch"]>
///     <FB Name="OH1" Type="OrderHolon"><Param Name="INBOX" Value=".."/></FB>
///     | <Connection Source="A.X" Destination="B.Y"/>
///   </Request>
///
/// answered by <Response ID="7" [Reason="Errc: detail"]/>.
struct MgmtRequest {
  std::string id;
  std::string resource;
  MgmtCommand command;
  std::optional<msg::ChannelId> reply;
};

/// Throws SchemaViolation / MissingAttribute.
MgmtRequest parse_mgmt_request(proto::Message const& m);
proto::Message mgmt_request_message(MgmtRequest const& r);

class Device {
 public:
  Device(std::string name, TypeRegistry const& types);
  ~Device();
  Device(Device const&) = delete;
  Device& operator=(Device const&) = delete;

  std::string const& name() const noexcept { return name_; }

  /// Throws ConfigError on duplicate names.
  Resource& add_resource(std::string const& name);
  Resource* find_resource(std::string_view name) const noexcept;
  Resource& resource(std::string_view name) const;  // throws ConfigError
  std::vector<Resource*> resources() const;          // by name

  /// Applies one request and returns the Response to send back. A DELETE
  /// first drains the resource's pending deliveries.
  proto::Message handle(MgmtRequest const& request);

  /// Listens for requests on `channel`; responses go to each request's Reply.
  void bind_management(msg::Bus& bus, msg::ChannelId channel);
  std::optional<msg::ChannelId> management_endpoint() const noexcept { return endpoint_; }
  std::size_t requests_handled() const noexcept { return handled_; }

 private:
  std::string name_;
  TypeRegistry const& types_;
  std::map<std::string, std::unique_ptr<Resource>, std::less<>> resources_;
  msg::Bus* bus_ = nullptr;
  std::uint64_t token_ = 0;
  std::optional<msg::ChannelId> endpoint_;
  std::size_t handled_ = 0;
};

}  // namespace hms::fb
