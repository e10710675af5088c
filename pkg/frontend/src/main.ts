import { App } from "./app";
import { mockFetch } from "./mock";
import "./styles.css";

const useMock = new URLSearchParams(window.location.search).has("mock");
const app = new App(useMock ? mockFetch() : undefined);
document.getElementById("root")!.appendChild(app.root);
