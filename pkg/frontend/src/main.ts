/** Entry point: mount the viewer against the service that hosts it. */

import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");
createApp(root, new ApiClient(""));
