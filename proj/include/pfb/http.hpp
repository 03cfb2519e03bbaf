#pragma once

#include "pfb/service.hpp"

namespace httplib {
class Server;
}

namespace pfb {

// Routes (JSON bodies; errors are {"code", "message"} with the matching status):
//   GET    /api/health
//   POST   /api/documents                       {title, text}
//   GET    /api/documents/{id}
//   PUT    /api/documents/{id}                  {title?, text?}
//   GET    /api/personas
//   POST   /api/personas                        {name}
//   GET    /api/personas/{id}
//   PUT    /api/personas/{id}                   {name?, sections?}
//   DELETE /api/personas/{id}
//   POST   /api/personas/{id}/sections/{section}/pairs           {attribute, description}
//   PUT    /api/personas/{id}/sections/{section}/pairs/{index}   {attribute, description}
//   DELETE /api/personas/{id}/sections/{section}/pairs/{index}
//   GET    /api/guidance
//   POST   /api/documents/{id}/feedback         {persona_id, selection: {start, end}, condense?}
//   GET    /api/documents/{id}/history
//   DELETE /api/documents/{id}/history/{card}
//   GET    /api/documents/{id}/history/{card}/context
//   POST   /api/documents/{id}/events           {events: [...]}
//   GET    /api/documents/{id}/stats
//   GET    /api/documents/{id}/timeline
//   GET    /api/documents/{id}/contribution
//   POST   /api/debug/prompt                    {document_id, persona_id, selection}
void register_routes(httplib::Server& server, Service& service);

} // namespace pfb
