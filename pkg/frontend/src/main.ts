import { ApiClient } from "./api.js";
import { DemoApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://127.0.0.1:8763";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

const app = new DemoApp(root, new ApiClient(base));
void app.boot();
