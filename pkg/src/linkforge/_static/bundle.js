"use strict";(()=>{var k=class extends Error{constructor(t,n){super(n);this.status=t}},$=class{constructor(e=(n,i)=>fetch(n,i),t=""){this.fetchImpl=e;this.base=t}async request(e,t){let n=await this.fetchImpl(this.base+e,t),i=await n.json().catch(()=>({}));if(!n.ok)throw new k(n.status,i.error??n.statusText);return i}getSession(){return this.request("/api/session")}getPairs(e="unlabeled",t=0,n=50,i="disagreement"){let a=new URLSearchParams({filter:e,order:i,offset:String(t),limit:String(n)});return this.request(`/api/pairs?${a}`)}postLabel(e,t,n){return this.request(`/api/pairs/${encodeURIComponent(e)}/label`,{method:"POST",headers:{"Content-Type":"application/json"},body:JSON.stringify({label:t,annotator:n})})}getConfigs(){return this.request("/api/configs")}selectConfig(e){return this.request("/api/configs/select",{method:"POST",headers:{"Content-Type":"application/json"},body:JSON.stringify({config_id:e})})}};function q(s){let e=[...s].sort((i,a)=>i.fpr-a.fpr||a.tpr-i.tpr||i.config_id-a.config_id),t=[],n=-1/0;for(let i of e)i.tpr>n&&(t.push(i),n=i.tpr);return t}function M(s,e=500){let t=q(s),n=new Set(t.map(o=>o.config_id)),i=s.filter(o=>!n.has(o.config_id));if(i.length<=e)return[...t,...i];let a=i.length/e,c=[];for(let o=0;o<e;o++)c.push(i[Math.floor(o*a)]);return[...t,...c]}var u=42,S=class{constructor(e,t,n,i=a=>window.confirm(a)){this.api=e;this.canvas=t;this.info=n;this.confirmFn=i;this.placed=[];this.payload=null;this.onStatus=()=>{};t.addEventListener("click",a=>{this.handleClick(a)})}async refresh(){this.payload=await this.api.getConfigs(),this.draw()}definedPoints(){return this.payload?this.payload.configs.filter(e=>typeof e.tpr=="number"&&typeof e.fpr=="number").map(e=>({config_id:e.config_id,fpr:e.fpr,tpr:e.tpr})):[]}draw(){let e=this.canvas.getContext("2d");if(!e||!this.payload)return;let{width:t,height:n}=this.canvas;e.clearRect(0,0,t,n);let i=t-2*u,a=n-2*u;e.strokeStyle="#888",e.strokeRect(u,u,i,a),e.fillStyle="#444",e.font="12px sans-serif",e.fillText("false positive rate \u2192",t/2-50,n-10),e.save(),e.translate(12,n/2+50),e.rotate(-Math.PI/2),e.fillText("true positive rate \u2192",0,0),e.restore();let c=l=>u+l*i,o=l=>u+(1-l)*a,h=o(this.payload.min_tpr);e.strokeStyle="#c77",e.setLineDash([6,4]),e.beginPath(),e.moveTo(u,h),e.lineTo(u+i,h),e.stroke(),e.setLineDash([]),e.fillStyle="#c77",e.fillText(`TPR ${this.payload.min_tpr}`,u+i-64,h-6);let g=this.definedPoints(),m=M(g,500);this.placed=m.map(l=>({...l,x:c(l.fpr),y:o(l.tpr)})),e.fillStyle="rgba(70,110,180,0.55)";for(let l of this.placed)e.beginPath(),e.arc(l.x,l.y,3,0,2*Math.PI),e.fill();let y=(l,w,P)=>{if(l===null)return;let f=g.find(L=>L.config_id===l);f&&(e.strokeStyle=w,e.lineWidth=2,e.beginPath(),e.arc(c(f.fpr),o(f.tpr),P,0,2*Math.PI),e.stroke(),e.lineWidth=1)};y(this.payload.recommended_config_id,"#1a7f1a",7),y(this.payload.selected_config_id,"#d4a017",10),this.renderInfo(g.length,m.length)}renderInfo(e,t){if(!this.payload)return;let n=this.payload.recommended_config_id,i=[`<span>${this.payload.configs.length} configs, ${e} with metrics, ${t} plotted</span>`];if(this.payload.selection_warning&&i.push(`<span class="warn">${this.payload.selection_warning}</span>`),n!==null){let c=this.payload.configs[n];i.push(`<button id="accept-recommended">select recommended #${n} (q=${c.quantile}, FPR=${c.fpr?.toFixed(3)}, TPR=${c.tpr?.toFixed(3)})</button>`)}else e===0&&i.push('<span class="warn">selection disabled: label at least one match and one non-match first</span>');this.payload.selected_config_id!==null&&i.push(`<span class="selected">selected: #${this.payload.selected_config_id}</span>`),this.info.innerHTML=i.join(" ");let a=this.info.querySelector("#accept-recommended");a&&n!==null&&a.addEventListener("click",()=>{this.select(n)})}async handleClick(e){let t=this.canvas.getBoundingClientRect(),n=(e.clientX-t.left)*(this.canvas.width/t.width),i=(e.clientY-t.top)*(this.canvas.height/t.height),a=null,c=64;for(let o of this.placed){let h=(o.x-n)**2+(o.y-i)**2;h<c&&(a=o,c=h)}a&&await this.select(a.config_id)}async select(e){let t=this.payload?.configs[e],n=t?`config #${e} (q=${t.quantile}, FPR=${t.fpr?.toFixed(3)??"?"}, TPR=${t.tpr?.toFixed(3)??"?"})`:`config #${e}`;if(this.confirmFn(`Select ${n} as the operating configuration?`))try{await this.api.selectConfig(e),this.onStatus(`selected config #${e}; chosen_config.json written`),await this.refresh()}catch(i){this.onStatus(`selection failed: ${i.message}`)}}};var C="linkforge.pendingLabels",x=class{constructor(e,t=null){this.post=e;this.storage=t;this.pending=[];this.flushing=!1;this.onChange=()=>{};if(this.storage){let n=this.storage.getItem(C);if(n)try{this.pending=JSON.parse(n)}catch{this.pending=[]}}}get depth(){return this.pending.length}snapshot(){return[...this.pending]}enqueue(e){let t=this.pending.findIndex(n=>n.pairId===e.pairId);t>=0?this.pending[t]=e:this.pending.push(e),this.persist(),this.onChange(this.depth)}async flush(){if(this.flushing)return this.pending.length===0;this.flushing=!0;try{for(;this.pending.length>0;){let e=this.pending[0];try{await this.post(e)}catch{return!1}this.pending.shift(),this.persist(),this.onChange(this.depth)}return!0}finally{this.flushing=!1}}persist(){this.storage&&(this.pending.length===0?this.storage.removeItem(C):this.storage.setItem(C,JSON.stringify(this.pending)))}};function E(s){switch(s.toLowerCase()){case"m":return{kind:"label",label:"match"};case"n":return{kind:"label",label:"nonmatch"};case"u":return{kind:"label",label:"unsure"};case"z":return{kind:"undo"};default:return null}}var T=class{constructor(e,t,n,i=25){this.api=e;this.queue=t;this.annotator=n;this.pageSize=i;this.pairs=[];this.cursor=0;this.exhausted=!1;this.seen=new Set;this.loading=!1}current(){return this.pairs[this.cursor]??null}get labeledCount(){return this.pairs.filter(e=>e.label!==null).length}async ensureLoaded(){if(!(this.loading||this.exhausted||this.cursor<this.pairs.length-3)){this.loading=!0;try{let t=(await this.api.getPairs("unlabeled",0,this.pageSize)).pairs.filter(n=>!this.seen.has(n.pair_id));for(let n of t)this.seen.add(n.pair_id),this.pairs.push(n);t.length===0&&(this.exhausted=!0)}finally{this.loading=!1}}}async label(e){let t=this.current();t&&(t.label=e,this.queue.enqueue({pairId:t.pair_id,label:e,annotator:this.annotator}),this.queue.flush(),this.cursor+=1,await this.ensureLoaded())}undo(){return this.cursor>0&&(this.cursor-=1),this.current()}async handle(e){e&&(e.kind==="label"?await this.label(e.label):this.undo())}};function H(s,e){return e===null?`<td class="sim missing" title="${s}: missing">\u2014</td>`:`<td class="sim" style="background:hsl(${Math.round(120*e)},70%,82%)">${e.toFixed(3)}</td>`}function v(s,e,t){return`<tr><th>${s}</th><td>${e}</td><td>${t}</td></tr>`}var d=s=>String(s??"").replace(/[&<>"]/g,e=>({"&":"&amp;","<":"&lt;",">":"&gt;",'"':"&quot;"})[e]);function I(s){let e=s.resident,t=s.contact,n=["first","middle","last","age","village","sex","honorific"];return`
  <div class="pair-card" data-pair="${d(s.pair_id)}">
    <div class="pair-head">
      <span class="score">score ${s.score===null?"\u2014":s.score.toFixed(4)}</span>
      <span class="frac">${(s.classified_fraction*100).toFixed(0)}% of configs say match</span>
      ${s.label?`<span class="current-label">${d(s.label)}</span>`:""}
    </div>
    <table class="records">
      <tr><th></th><th>resident</th><th>named contact</th></tr>
      ${v("name",d(e?.name),d(t?.name))}
      ${v("age",d(e?.age??"\u2014"),d(t?.age??"\u2014"))}
      ${v("sex",d(e?.sex??"\u2014"),d(t?.sex??"\u2014 (imputed)"))}
      ${v("village",d(e?.village??"\u2014"),d(t?.village??"\u2014"))}
      ${v("context",d(e?.household?`household ${e.household}`:""),d(t?.domain?`${t.domain} contact of ${t.namer}`:""))}
    </table>
    <table class="sims">
      <tr>${n.map(i=>`<th>${i}</th>`).join("")}</tr>
      <tr>${n.map(i=>H(i,s.sims[i]??null)).join("")}</tr>
    </table>
    <div class="label-buttons">
      <button data-label="match">match (m)</button>
      <button data-label="nonmatch">non-match (n)</button>
      <button data-label="unsure">unsure (u)</button>
      <button data-label="undo">back (z)</button>
    </div>
  </div>`}var R=2e3;function p(s){let e=document.getElementById(s);if(!e)throw new Error(`missing #${s}`);return e}async function F(){let s=p("app");s.innerHTML=`
    <header>
      <h1>linkforge review</h1>
      <nav>
        <button id="tab-review" class="active">review pairs</button>
        <button id="tab-configs">configurations</button>
      </nav>
      <div id="progress"><div id="progress-bar"></div><span id="progress-text"></span></div>
    </header>
    <div id="banner" hidden></div>
    <main>
      <section id="view-review"><div id="card"></div></section>
      <section id="view-configs" hidden>
        <canvas id="scatter" width="860" height="560"></canvas>
        <div id="config-info"></div>
      </section>
    </main>
    <footer id="status"></footer>`;let e=new $,t=new URLSearchParams(location.search).get("annotator")??"reviewer",n=new x(r=>e.postLabel(r.pairId,r.label,r.annotator),window.localStorage),i=new T(e,n,t),a=p("banner"),c=p("status");n.onChange=r=>{r>0?(a.hidden=!1,a.textContent=`${r} label${r>1?"s":""} not yet saved - retrying automatically`):a.hidden=!0},n.flush(),setInterval(()=>{n.flush()},R);let o=p("card"),h=()=>{let r=i.current();o.innerHTML=r?I(r):`<p class="done">${i.exhausted?"No unlabeled pairs left - switch to the configurations tab.":"Loading pairs\u2026"}</p>`,o.querySelectorAll("button[data-label]").forEach(b=>{b.addEventListener("click",()=>{let _=b.dataset.label;(_==="undo"?i.handle({kind:"undo"}):i.handle({kind:"label",label:_})).then(h)})})},g=async()=>{try{let r=await e.getSession();p("progress-bar").style.width=`${Math.round(r.progress*100)}%`,p("progress-text").textContent=`${r.labeled}/${r.n_pairs} labeled`+(r.selected_config_id!==null?` - config #${r.selected_config_id} selected`:"")}catch{}},m=new S(e,p("scatter"),p("config-info"));m.onStatus=r=>{c.textContent=r};let y=p("view-review"),l=p("view-configs"),w=p("tab-review"),P=p("tab-configs"),f="review",L=r=>{f=r,y.hidden=r!=="review",l.hidden=r!=="configs",w.classList.toggle("active",r==="review"),P.classList.toggle("active",r==="configs"),r==="configs"&&m.refresh()};w.addEventListener("click",()=>L("review")),P.addEventListener("click",()=>L("configs")),document.addEventListener("keydown",r=>{if(f!=="review"||r.ctrlKey||r.metaKey||r.altKey)return;let b=E(r.key);b&&(r.preventDefault(),i.handle(b).then(h))}),await i.ensureLoaded(),h(),await g(),setInterval(()=>{g(),f==="configs"&&m.refresh()},R)}F();})();
